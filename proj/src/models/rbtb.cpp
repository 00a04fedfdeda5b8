#include "btblab/models/rbtb.hpp"

#include <numeric>

#include <fmt/core.h>

namespace btblab {

RBtb::RBtb(std::int64_t main_entries, int assoc, std::int64_t page_entries, const IsaProfile& isa)
    : isa_(isa),
      sets_(checked_sets(main_entries, assoc, "R-BTB Main-BTB")),
      assoc_(assoc),
      index_(sets_, ConvGeometry{}.tag_bits, isa.align_shift),
      valid_(static_cast<std::size_t>(sets_ * assoc), 0),
      entries_(static_cast<std::size_t>(sets_ * assoc)),
      lru_(sets_, assoc),
      pages_(1, static_cast<int>(page_entries)),
      all_ways_(static_cast<std::size_t>(assoc)),
      valid_counts_(static_cast<std::size_t>(assoc), 0),
      capacities_(static_cast<std::size_t>(assoc), sets_) {
  isa_.validate();
  std::iota(all_ways_.begin(), all_ways_.end(), 0);
  for (int w = 0; w < assoc; ++w) labels_.push_back(fmt::format("way{}", w));
}

std::optional<int> RBtb::find_way(std::int64_t set, std::uint64_t tag) const {
  for (int w = 0; w < assoc_; ++w) {
    const auto s = slot(set, w);
    if (valid_[s] && entries_[s].tag == tag) return w;
  }
  return std::nullopt;
}

std::optional<Addr> RBtb::rebuild(const Entry& e) const {
  if (!pages_.live(e.page)) return std::nullopt;
  return (pages_.value(e.page) << kPageOffsetBits) | e.page_offset;
}

std::optional<Prediction> RBtb::lookup(Addr pc) {
  const std::int64_t set = index_.index(pc);
  const auto w = find_way(set, index_.tag(pc));
  if (!w) return std::nullopt;
  const Entry& e = entries_[slot(set, *w)];
  Prediction p;
  p.kind = e.kind;
  p.source = *w;
  if (e.kind != BranchKind::ret) {
    const auto target = rebuild(e);
    if (!target) {
      ++stale_lookups_;
      return std::nullopt;
    }
    pages_.touch(e.page);
    p.target = target;
  }
  lru_.touch(set, *w);
  return p;
}

void RBtb::write(Entry& e, const BranchRecord& record) {
  e.kind = record.kind;
  if (record.kind == BranchKind::ret) {
    e.page = {};
    e.page_offset = 0;
    return;
  }
  e.page_offset = record.target & low_mask(kPageOffsetBits);
  e.page = pages_.insert(0, record.target >> kPageOffsetBits);
}

UpdateOutcome RBtb::commit_update(const BranchRecord& record) {
  const std::int64_t set = index_.index(record.pc);
  if (const auto w = find_way(set, index_.tag(record.pc))) {
    Entry& e = entries_[slot(set, *w)];
    lru_.touch(set, *w);
    if (record.kind == BranchKind::ret ? e.kind == BranchKind::ret
                                       : e.kind != BranchKind::ret && rebuild(e) == record.target) {
      e.kind = record.kind;
      if (record.kind != BranchKind::ret) pages_.touch(e.page);
      return {UpdateAction::refreshed, *w, false};
    }
    write(e, record);
    return {UpdateAction::rewritten, *w, false};
  }
  const std::span<const std::uint8_t> set_valid{valid_.data() + slot(set, 0), static_cast<std::size_t>(assoc_)};
  const int victim = select_victim_restricted_lru(lru_.set_ages(set), set_valid, all_ways_);
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
  return {UpdateAction::allocated, victim, evicted};
}

void RBtb::reset() {
  std::fill(valid_.begin(), valid_.end(), 0);
  std::fill(entries_.begin(), entries_.end(), Entry{});
  lru_.reset();
  pages_.reset();
  std::fill(valid_counts_.begin(), valid_counts_.end(), 0);
  stale_lookups_ = 0;
}

}  // namespace btblab
