#include "btblab/models/side_table.hpp"

#include <numeric>
#include <stdexcept>

namespace btblab {

SideTable::SideTable(std::int64_t sets, int ways)
    : sets_(sets),
      ways_(ways),
      valid_(static_cast<std::size_t>(sets * ways), 0),
      values_(static_cast<std::size_t>(sets * ways), 0),
      generations_(static_cast<std::size_t>(sets * ways), 0),
      lru_(sets, ways),
      all_ways_(static_cast<std::size_t>(ways)) {
  if (sets <= 0 || ways <= 0) throw std::invalid_argument("side table needs positive sets and ways");
  std::iota(all_ways_.begin(), all_ways_.end(), 0);
}

std::optional<SideTable::Ref> SideTable::find(std::int64_t set, std::uint64_t value) const {
  for (int w = 0; w < ways_; ++w) {
    const auto s = static_cast<std::size_t>(set * ways_ + w);
    if (valid_[s] && values_[s] == value) return Ref{static_cast<std::int64_t>(s), generations_[s]};
  }
  return std::nullopt;
}

SideTable::Ref SideTable::insert(std::int64_t set, std::uint64_t value) {
  if (auto hit = find(set, value)) {
    touch(*hit);
    return *hit;
  }
  const auto base = static_cast<std::size_t>(set * ways_);
  const std::span<const std::uint8_t> set_valid{valid_.data() + base, static_cast<std::size_t>(ways_)};
  const int victim = select_victim_restricted_lru(lru_.set_ages(set), set_valid, all_ways_);
  const auto s = base + static_cast<std::size_t>(victim);
  if (valid_[s]) {
    ++evictions_;
  } else {
    valid_[s] = 1;
    ++valid_count_;
  }
  values_[s] = value;
  ++generations_[s];
  lru_.touch(set, victim);
  return {static_cast<std::int64_t>(s), generations_[s]};
}

void SideTable::touch(const Ref& ref) {
  lru_.touch(ref.slot / ways_, static_cast<int>(ref.slot % ways_));
}

bool SideTable::live(const Ref& ref) const {
  if (ref.slot < 0 || ref.slot >= capacity()) return false;
  const auto s = static_cast<std::size_t>(ref.slot);
  return valid_[s] && generations_[s] == ref.generation;
}

void SideTable::reset() {
  std::fill(valid_.begin(), valid_.end(), 0);
  std::fill(values_.begin(), values_.end(), 0);
  // Generations keep counting so pointers from before the reset stay stale.
  lru_.reset();
  valid_count_ = 0;
  evictions_ = 0;
}

}  // namespace btblab
