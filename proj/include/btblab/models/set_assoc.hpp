#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "btblab/core.hpp"

namespace btblab {

// Set index and partial tag for a set-associative structure. The index is the
// instruction address (pc >> align_shift) modulo the set count, so power-of-two
// geometries take the low PC bits; the tag is the XOR-fold of the remaining
// high bits.
class SetIndexer {
 public:
  SetIndexer(std::int64_t sets, int tag_bits, int align_shift);

  std::int64_t index(Addr pc) const;
  std::uint64_t tag(Addr pc) const;
  std::int64_t sets() const { return sets_; }

 private:
  std::int64_t sets_;
  int tag_bits_;
  int align_shift_;
};

// entries / assoc, rejecting empty or ragged geometries.
std::int64_t checked_sets(std::int64_t entries, int assoc, std::string_view what);

// True-LRU age counters, one per way; age 0 is most recently used. Ages of a
// set always form a permutation of 0..ways-1.
class LruAges {
 public:
  LruAges(std::int64_t sets, int ways);

  void touch(std::int64_t set, int way);
  std::uint32_t age(std::int64_t set, int way) const {
    return ages_[static_cast<std::size_t>(set * ways_ + way)];
  }
  std::span<const std::uint32_t> set_ages(std::int64_t set) const;
  void reset();
  int ways() const { return ways_; }

 private:
  int ways_;
  std::vector<std::uint32_t> ages_;
};

// Restricted-LRU victim choice: the lowest-indexed invalid way among
// `eligible` if any, otherwise the eligible way with the greatest age.
// `eligible` must be non-empty (std::logic_error otherwise).
int select_victim_restricted_lru(std::span<const std::uint32_t> ages, std::span<const std::uint8_t> valid,
                                 std::span<const int> eligible);

}  // namespace btblab
