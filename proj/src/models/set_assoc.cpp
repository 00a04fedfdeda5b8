#include "btblab/models/set_assoc.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "btblab/models/model.hpp"

#include <fmt/core.h>

namespace btblab {

SetIndexer::SetIndexer(std::int64_t sets, int tag_bits, int align_shift)
    : sets_(sets), tag_bits_(tag_bits), align_shift_(align_shift) {
  if (sets <= 0) throw std::invalid_argument("set count must be positive");
}

std::int64_t SetIndexer::index(Addr pc) const {
  return static_cast<std::int64_t>((pc >> align_shift_) % static_cast<std::uint64_t>(sets_));
}

std::uint64_t SetIndexer::tag(Addr pc) const {
  return fold_xor((pc >> align_shift_) / static_cast<std::uint64_t>(sets_), tag_bits_);
}

std::int64_t checked_sets(std::int64_t entries, int assoc, std::string_view what) {
  if (assoc <= 0 || entries <= 0 || entries % assoc != 0) {
    throw std::invalid_argument(
        fmt::format("{} needs a positive entry count divisible by its associativity ({} / {})", what, entries, assoc));
  }
  return entries / assoc;
}

LruAges::LruAges(std::int64_t sets, int ways)
    : ways_(ways), ages_(static_cast<std::size_t>(sets * ways)) {
  reset();
}

void LruAges::touch(std::int64_t set, int way) {
  auto* base = ages_.data() + set * ways_;
  const std::uint32_t old = base[way];
  for (int w = 0; w < ways_; ++w) {
    if (base[w] < old) ++base[w];
  }
  base[way] = 0;
}

std::span<const std::uint32_t> LruAges::set_ages(std::int64_t set) const {
  return {ages_.data() + set * ways_, static_cast<std::size_t>(ways_)};
}

void LruAges::reset() {
  for (std::size_t i = 0; i < ages_.size(); ++i) {
    ages_[i] = static_cast<std::uint32_t>(i % static_cast<std::size_t>(ways_));
  }
}

int select_victim_restricted_lru(std::span<const std::uint32_t> ages, std::span<const std::uint8_t> valid,
                                 std::span<const int> eligible) {
  if (eligible.empty()) throw std::logic_error("victim selection over an empty way set");
  int best = -1;
  for (const int w : eligible) {
    if (!valid[static_cast<std::size_t>(w)] && (best < 0 || w < best)) best = w;
  }
  if (best >= 0) return best;
  best = eligible.front();
  for (const int w : eligible) {
    if (ages[static_cast<std::size_t>(w)] > ages[static_cast<std::size_t>(best)]) best = w;
  }
  return best;
}

std::vector<SourceOccupancy> BtbModel::occupancy() const {
  std::vector<SourceOccupancy> out;
  const auto& labels = source_labels();
  const auto valid = valid_counts();
  const auto caps = source_capacities();
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({labels[i], valid[i], caps[i]});
  return out;
}

std::string_view action_name(UpdateAction a) {
  switch (a) {
    case UpdateAction::refreshed: return "refreshed";
    case UpdateAction::rewritten: return "rewritten";
    case UpdateAction::migrated: return "migrated";
    case UpdateAction::allocated: return "allocated";
  }
  return "?";
}

}  // namespace btblab
