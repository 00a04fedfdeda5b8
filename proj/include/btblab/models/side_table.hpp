#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "btblab/models/set_assoc.hpp"

namespace btblab {

// Set-associative store of deduplicated values (page or region numbers) that
// main-BTB entries point into. Every slot carries a generation that changes
// when the slot is handed to a new value, so holders of an old pointer can
// tell it has gone stale.
class SideTable {
 public:
  struct Ref {
    std::int64_t slot = -1;
    std::uint32_t generation = 0;
    bool operator==(const Ref&) const = default;
  };

  SideTable(std::int64_t sets, int ways);

  std::optional<Ref> find(std::int64_t set, std::uint64_t value) const;
  // Find-or-allocate; the slot becomes most recently used.
  Ref insert(std::int64_t set, std::uint64_t value);
  void touch(const Ref& ref);

  bool live(const Ref& ref) const;
  std::uint64_t value(const Ref& ref) const { return values_[static_cast<std::size_t>(ref.slot)]; }

  std::int64_t sets() const { return sets_; }
  int ways() const { return ways_; }
  std::int64_t capacity() const { return sets_ * ways_; }
  std::int64_t valid_count() const { return valid_count_; }
  std::uint64_t evictions() const { return evictions_; }
  void reset();

 private:
  std::int64_t sets_;
  int ways_;
  std::vector<std::uint8_t> valid_;
  std::vector<std::uint64_t> values_;
  std::vector<std::uint32_t> generations_;
  LruAges lru_;
  std::vector<int> all_ways_;
  std::int64_t valid_count_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace btblab
