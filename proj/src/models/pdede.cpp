#include "btblab/models/pdede.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include <fmt/core.h>

namespace btblab {

namespace {

PdedeConfig checked(PdedeConfig c) {
  if (c.main_sets <= 0) throw std::invalid_argument("PDede needs at least one Main-BTB set");
  if (c.main_assoc < 2 || c.main_assoc % 2 != 0) {
    throw std::invalid_argument("PDede Main-BTB associativity must be even");
  }
  if (c.page_entries <= 0 || c.region_entries <= 0 || c.page_assoc <= 0) {
    throw std::invalid_argument("PDede side tables need positive sizes");
  }
  c.page_assoc = static_cast<int>(std::min<std::int64_t>(c.page_assoc, c.page_entries));
  if (c.page_entries % c.page_assoc != 0) {
    throw std::invalid_argument(fmt::format("Page-BTB entries {} not divisible by {}", c.page_entries, c.page_assoc));
  }
  return c;
}

}  // namespace

PdedeBtb::PdedeBtb(const PdedeConfig& config, const IsaProfile& isa)
    : config_(checked(config)),
      isa_(isa),
      layout_(PdedeFieldLayout::for_isa(isa)),
      index_(config_.main_sets, ConvGeometry{}.tag_bits, isa.align_shift),
      valid_(static_cast<std::size_t>(config_.main_sets * config_.main_assoc), 0),
      entries_(static_cast<std::size_t>(config_.main_sets * config_.main_assoc)),
      lru_(config_.main_sets, config_.main_assoc),
      pages_(config_.page_entries / config_.page_assoc, config_.page_assoc),
      page_region_(static_cast<std::size_t>(config_.page_entries)),
      regions_(1, config_.region_entries),
      all_ways_(static_cast<std::size_t>(config_.main_assoc)),
      valid_counts_(static_cast<std::size_t>(config_.main_assoc), 0),
      capacities_(static_cast<std::size_t>(config_.main_assoc), config_.main_sets) {
  isa_.validate();
  std::iota(all_ways_.begin(), all_ways_.end(), 0);
  for (int w = same_page_ways(); w < config_.main_assoc; ++w) general_ways_.push_back(w);
  for (int w = 0; w < config_.main_assoc; ++w) {
    labels_.push_back(fmt::format("{}{}", w < same_page_ways() ? "same" : "gen", w));
  }
}

bool PdedeBtb::same_page(const BranchRecord& record) const {
  return record.kind == BranchKind::ret ||
         (record.pc >> kPageOffsetBits) == (record.target >> kPageOffsetBits);
}

std::optional<int> PdedeBtb::find_way(std::int64_t set, std::uint64_t tag) const {
  for (int w = 0; w < config_.main_assoc; ++w) {
    const auto s = slot(set, w);
    if (valid_[s] && entries_[s].tag == tag) return w;
  }
  return std::nullopt;
}

std::int64_t PdedeBtb::page_set(std::uint64_t page_number) const {
  const auto sets = static_cast<std::uint64_t>(pages_.sets());
  if (std::has_single_bit(sets)) {
    return static_cast<std::int64_t>(fold_xor(page_number, std::countr_zero(sets)) & (sets - 1));
  }
  return static_cast<std::int64_t>(page_number % sets);
}

std::optional<Addr> PdedeBtb::rebuild(Addr pc, const Entry& e, bool count_reads) {
  if (e.same_page) return (pc & ~low_mask(kPageOffsetBits)) | e.page_offset;
  if (count_reads) ++page_reads_;
  if (!pages_.live(e.page)) return std::nullopt;
  const auto& region = page_region_[static_cast<std::size_t>(e.page.slot)];
  if (!regions_.live(region)) return std::nullopt;
  const std::uint64_t partial_page = pages_.value(e.page) & low_mask(layout_.partial_page_bits);
  return (regions_.value(region) << (kPageOffsetBits + layout_.partial_page_bits)) |
         (partial_page << kPageOffsetBits) | e.page_offset;
}

std::optional<Prediction> PdedeBtb::lookup(Addr pc) {
  const std::int64_t set = index_.index(pc);
  const auto w = find_way(set, index_.tag(pc));
  if (!w) return std::nullopt;
  const Entry& e = entries_[slot(set, *w)];
  Prediction p;
  p.kind = e.kind;
  p.source = *w;
  if (e.kind != BranchKind::ret) {
    const auto target = rebuild(pc, e, true);
    if (!target) {
      ++stale_lookups_;
      return std::nullopt;
    }
    if (!e.same_page) {
      pages_.touch(e.page);
      regions_.touch(page_region_[static_cast<std::size_t>(e.page.slot)]);
    }
    p.target = target;
  }
  lru_.touch(set, *w);
  return p;
}

SideTable::Ref PdedeBtb::ensure_page(Addr target) {
  const std::uint64_t page_number = target >> kPageOffsetBits;
  const std::uint64_t region_number = page_number >> layout_.partial_page_bits;
  const SideTable::Ref region = regions_.insert(0, region_number);
  const std::int64_t set = page_set(page_number);
  if (auto hit = pages_.find(set, page_number)) {
    auto& held = page_region_[static_cast<std::size_t>(hit->slot)];
    if (regions_.live(held) && regions_.value(held) == region_number) {
      pages_.touch(*hit);
      return *hit;
    }
    // Same page, but its region slot was recycled: repoint it.
    held = region;
    pages_.touch(*hit);
    return *hit;
  }
  const SideTable::Ref page = pages_.insert(set, page_number);
  page_region_[static_cast<std::size_t>(page.slot)] = region;
  return page;
}

void PdedeBtb::write(Entry& e, const BranchRecord& record) {
  e.kind = record.kind;
  e.same_page = same_page(record);
  e.page = {};
  e.page_offset = record.kind == BranchKind::ret ? 0 : record.target & low_mask(kPageOffsetBits);
  if (!e.same_page) e.page = ensure_page(record.target);
}

UpdateOutcome PdedeBtb::commit_update(const BranchRecord& record) {
  const std::int64_t set = index_.index(record.pc);
  const bool fits_same_page_way = same_page(record);
  UpdateAction action = UpdateAction::allocated;

  if (const auto w = find_way(set, index_.tag(record.pc))) {
    Entry& e = entries_[slot(set, *w)];
    const bool same = record.kind == BranchKind::ret
                          ? e.kind == BranchKind::ret
                          : e.kind != BranchKind::ret && rebuild(record.pc, e, false) == record.target;
    if (same) {
      e.kind = record.kind;
      if (!e.same_page) {
        pages_.touch(e.page);
        regions_.touch(page_region_[static_cast<std::size_t>(e.page.slot)]);
      }
      lru_.touch(set, *w);
      return {UpdateAction::refreshed, *w, false};
    }
    if (fits_same_page_way || *w >= same_page_ways()) {
      write(e, record);
      lru_.touch(set, *w);
      return {UpdateAction::rewritten, *w, false};
    }
    // Now a different-page branch sitting in a same-page-only way.
    valid_[slot(set, *w)] = 0;
    --valid_counts_[static_cast<std::size_t>(*w)];
    action = UpdateAction::migrated;
  }

  const auto& eligible = fits_same_page_way ? all_ways_ : general_ways_;
  const std::span<const std::uint8_t> set_valid{valid_.data() + slot(set, 0),
                                                static_cast<std::size_t>(config_.main_assoc)};
  const int victim = select_victim_restricted_lru(lru_.set_ages(set), set_valid, eligible);
  const auto s = slot(set, victim);
  const bool evicted = valid_[s] != 0;
  if (!evicted) {
    valid_[s] = 1;
    ++valid_counts_[static_cast<std::size_t>(victim)];
  }
  Entry& e = entries_[s];
  e.tag = index_.tag(record.pc);
  write(e, record);
  lru_.touch(set, victim);
  return {action, victim, evicted};
}

void PdedeBtb::reset() {
  std::fill(valid_.begin(), valid_.end(), 0);
  std::fill(entries_.begin(), entries_.end(), Entry{});
  lru_.reset();
  pages_.reset();
  regions_.reset();
  std::fill(page_region_.begin(), page_region_.end(), SideTable::Ref{});
  std::fill(valid_counts_.begin(), valid_counts_.end(), 0);
  stale_lookups_ = 0;
  page_reads_ = 0;
}

}  // namespace btblab
