#include "btblab/models/btbx.hpp"

#include <bit>

#include <fmt/core.h>

namespace btblab {

BtbX::BtbX(const BtbxGeometry& geometry)
    : geometry_(geometry),
      index_(geometry.sets, geometry.tag_bits, geometry.isa.align_shift),
      xc_index_bits_(std::countr_zero(static_cast<std::uint64_t>(geometry.xc_entries))),
      valid_(static_cast<std::size_t>(geometry.sets * kBtbxWays), 0),
      entries_(static_cast<std::size_t>(geometry.sets * kBtbxWays)),
      xc_(static_cast<std::size_t>(geometry.xc_entries)),
      lru_(geometry.sets, kBtbxWays),
      valid_counts_(kBtbxWays + 1, 0),
      capacities_(kBtbxWays + 1, geometry.sets) {
  geometry_.validate();
  for (int w = 0; w < kBtbxWays; ++w) labels_.push_back(fmt::format("way{}", w));
  labels_.push_back("xc");
  capacities_[kXcSource] = geometry.xc_entries;
}

std::vector<int> BtbX::eligible_ways(int width) const {
  std::vector<int> out;
  for (int w = 0; w < kBtbxWays; ++w) {
    if (geometry_.way_widths[static_cast<std::size_t>(w)] >= width) out.push_back(w);
  }
  return out;
}

std::optional<int> BtbX::find_way(std::int64_t set, std::uint64_t tag) const {
  for (int w = 0; w < kBtbxWays; ++w) {
    const auto s = slot(set, w);
    if (valid_[s] && entries_[s].tag == tag) return w;
  }
  return std::nullopt;
}

std::int64_t BtbX::xc_index(Addr pc) const {
  return static_cast<std::int64_t>((pc >> geometry_.isa.align_shift) & low_mask(xc_index_bits_));
}

std::uint64_t BtbX::xc_tag(Addr pc) const {
  return fold_xor((pc >> geometry_.isa.align_shift) >> xc_index_bits_, geometry_.xc_tag_bits);
}

Addr BtbX::way_target(Addr pc, int way, const Entry& e) const {
  const OffsetEncoding enc{geometry_.way_widths[static_cast<std::size_t>(way)], e.offset};
  return decode_target(pc, enc, geometry_.isa);
}

std::optional<int> BtbX::resident_source(Addr pc) const {
  if (auto w = find_way(index_.index(pc), index_.tag(pc))) return w;
  const auto& x = xc_[static_cast<std::size_t>(xc_index(pc))];
  if (x.valid && x.tag == xc_tag(pc)) return kXcSource;
  return std::nullopt;
}

std::optional<Prediction> BtbX::lookup(Addr pc) {
  const std::int64_t set = index_.index(pc);
  if (auto w = find_way(set, index_.tag(pc))) {
    lru_.touch(set, *w);
    const Entry& e = entries_[slot(set, *w)];
    Prediction p;
    p.kind = e.kind;
    p.source = *w;
    // A way-0 hit on a return means the target comes from the RAS.
    if (e.kind != BranchKind::ret) p.target = way_target(pc, *w, e);
    return p;
  }
  const auto& x = xc_[static_cast<std::size_t>(xc_index(pc))];
  if (x.valid && x.tag == xc_tag(pc)) {
    Prediction p;
    p.kind = x.kind;
    p.source = kXcSource;
    if (x.kind != BranchKind::ret) p.target = x.target;
    return p;
  }
  return std::nullopt;
}

void BtbX::invalidate(std::int64_t set, int way) {
  const auto s = slot(set, way);
  if (valid_[s]) {
    valid_[s] = 0;
    --valid_counts_[static_cast<std::size_t>(way)];
  }
}

UpdateOutcome BtbX::allocate(const BranchRecord& record, int width, UpdateAction action) {
  if (width > geometry_.widest_way()) {
    auto& x = xc_[static_cast<std::size_t>(xc_index(record.pc))];
    const bool evicted = x.valid;
    if (!x.valid) ++valid_counts_[kXcSource];
    x = {true, xc_tag(record.pc), record.target, record.kind};
    return {action, kXcSource, evicted};
  }
  const std::int64_t set = index_.index(record.pc);
  const auto eligible = eligible_ways(width);
  const std::span<const std::uint8_t> set_valid{valid_.data() + slot(set, 0), kBtbxWays};
  const int victim = select_victim_restricted_lru(lru_.set_ages(set), set_valid, eligible);
  const auto s = slot(set, victim);
  const bool evicted = valid_[s] != 0;
  if (!evicted) {
    valid_[s] = 1;
    ++valid_counts_[static_cast<std::size_t>(victim)];
  }
  Entry& e = entries_[s];
  e.tag = index_.tag(record.pc);
  e.kind = record.kind;
  e.offset = record.kind == BranchKind::ret
                 ? 0
                 : encode_offset_at_width(record.target, geometry_.way_widths[static_cast<std::size_t>(victim)],
                                          geometry_.isa)
                       .bits;
  lru_.touch(set, victim);
  return {action, victim, evicted};
}

UpdateOutcome BtbX::commit_update(const BranchRecord& record) {
  const int width = stored_width_for(record, geometry_.isa);
  const std::int64_t set = index_.index(record.pc);

  if (auto w = find_way(set, index_.tag(record.pc))) {
    Entry& e = entries_[slot(set, *w)];
    const int way_width = geometry_.way_widths[static_cast<std::size_t>(*w)];
    const bool returns = record.kind == BranchKind::ret;
    const bool same = returns ? e.kind == BranchKind::ret
                              : e.kind != BranchKind::ret && way_target(record.pc, *w, e) == record.target;
    e.kind = record.kind;
    if (same) {
      lru_.touch(set, *w);
      return {UpdateAction::refreshed, *w, false};
    }
    if (width <= way_width) {
      e.offset = returns ? 0 : encode_offset_at_width(record.target, way_width, geometry_.isa).bits;
      lru_.touch(set, *w);
      return {UpdateAction::rewritten, *w, false};
    }
    invalidate(set, *w);
    return allocate(record, width, UpdateAction::migrated);
  }

  auto& x = xc_[static_cast<std::size_t>(xc_index(record.pc))];
  if (x.valid && x.tag == xc_tag(record.pc)) {
    if (width > geometry_.widest_way()) {
      const bool same = x.target == record.target && x.kind == record.kind;
      x.target = record.target;
      x.kind = record.kind;
      return {same ? UpdateAction::refreshed : UpdateAction::rewritten, kXcSource, false};
    }
    // The branch now fits a BTB-X way; the XC copy goes away.
    x.valid = false;
    --valid_counts_[kXcSource];
    return allocate(record, width, UpdateAction::migrated);
  }

  return allocate(record, width, UpdateAction::allocated);
}

void BtbX::reset() {
  std::fill(valid_.begin(), valid_.end(), 0);
  std::fill(entries_.begin(), entries_.end(), Entry{});
  std::fill(xc_.begin(), xc_.end(), XcEntry{});
  lru_.reset();
  std::fill(valid_counts_.begin(), valid_counts_.end(), 0);
}

}  // namespace btblab
