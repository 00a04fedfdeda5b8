#include "btblab/models/conv.hpp"

#include <numeric>

#include <fmt/core.h>

namespace btblab {

ConvBtb::ConvBtb(std::int64_t entries, int assoc, const IsaProfile& isa)
    : isa_(isa),
      geometry_(ConvGeometry::for_isa(isa)),
      sets_(checked_sets(entries, assoc, "conventional BTB")),
      assoc_(assoc),
      index_(sets_, geometry_.tag_bits, isa.align_shift),
      valid_(static_cast<std::size_t>(entries), 0),
      entries_(static_cast<std::size_t>(entries)),
      lru_(sets_, assoc),
      all_ways_(static_cast<std::size_t>(assoc)),
      valid_counts_(static_cast<std::size_t>(assoc), 0),
      capacities_(static_cast<std::size_t>(assoc), sets_) {
  isa_.validate();
  std::iota(all_ways_.begin(), all_ways_.end(), 0);
  for (int w = 0; w < assoc; ++w) labels_.push_back(fmt::format("way{}", w));
}

std::optional<int> ConvBtb::find_way(std::int64_t set, std::uint64_t tag) const {
  for (int w = 0; w < assoc_; ++w) {
    const auto s = slot(set, w);
    if (valid_[s] && entries_[s].tag == tag) return w;
  }
  return std::nullopt;
}

std::optional<Prediction> ConvBtb::lookup(Addr pc) {
  const std::int64_t set = index_.index(pc);
  const auto w = find_way(set, index_.tag(pc));
  if (!w) return std::nullopt;
  lru_.touch(set, *w);
  const Entry& e = entries_[slot(set, *w)];
  Prediction p;
  p.kind = e.kind;
  p.source = *w;
  if (e.kind != BranchKind::ret) p.target = e.target;
  return p;
}

UpdateOutcome ConvBtb::commit_update(const BranchRecord& record) {
  const std::int64_t set = index_.index(record.pc);
  if (const auto w = find_way(set, index_.tag(record.pc))) {
    Entry& e = entries_[slot(set, *w)];
    const bool same = e.kind == record.kind && (record.kind == BranchKind::ret || e.target == record.target);
    e.target = record.target;
    e.kind = record.kind;
    lru_.touch(set, *w);
    return {same ? UpdateAction::refreshed : UpdateAction::rewritten, *w, false};
  }
  const std::span<const std::uint8_t> set_valid{valid_.data() + slot(set, 0), static_cast<std::size_t>(assoc_)};
  const int victim = select_victim_restricted_lru(lru_.set_ages(set), set_valid, all_ways_);
  const auto s = slot(set, victim);
  const bool evicted = valid_[s] != 0;
  if (!evicted) {
    valid_[s] = 1;
    ++valid_counts_[static_cast<std::size_t>(victim)];
  }
  entries_[s] = {index_.tag(record.pc), record.target, record.kind};
  lru_.touch(set, victim);
  return {UpdateAction::allocated, victim, evicted};
}

void ConvBtb::reset() {
  std::fill(valid_.begin(), valid_.end(), 0);
  std::fill(entries_.begin(), entries_.end(), Entry{});
  lru_.reset();
  std::fill(valid_counts_.begin(), valid_counts_.end(), 0);
}

}  // namespace btblab
