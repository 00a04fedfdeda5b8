#pragma once

#include <vector>

#include "btblab/models/model.hpp"
#include "btblab/models/set_assoc.hpp"
#include "btblab/storage.hpp"

namespace btblab {

// Conventional set-associative BTB storing full targets, plain LRU.
class ConvBtb final : public BtbModel {
 public:
  ConvBtb(std::int64_t entries, int assoc, const IsaProfile& isa);

  std::string name() const override { return "conv"; }
  const IsaProfile& isa() const override { return isa_; }
  std::optional<Prediction> lookup(Addr pc) override;
  UpdateOutcome commit_update(const BranchRecord& record) override;
  void reset() override;

  std::int64_t capacity() const override { return sets_ * assoc_; }
  const std::vector<std::string>& source_labels() const override { return labels_; }
  std::span<const std::int64_t> valid_counts() const override { return valid_counts_; }
  std::span<const std::int64_t> source_capacities() const override { return capacities_; }

  std::int64_t sets() const { return sets_; }
  int assoc() const { return assoc_; }
  const ConvGeometry& geometry() const { return geometry_; }

 private:
  struct Entry {
    std::uint64_t tag = 0;
    Addr target = 0;
    BranchKind kind = BranchKind::conditional;
  };

  std::size_t slot(std::int64_t set, int way) const {
    return static_cast<std::size_t>(set * assoc_ + way);
  }
  std::optional<int> find_way(std::int64_t set, std::uint64_t tag) const;

  IsaProfile isa_;
  ConvGeometry geometry_;
  std::int64_t sets_;
  int assoc_;
  SetIndexer index_;
  std::vector<std::uint8_t> valid_;
  std::vector<Entry> entries_;
  LruAges lru_;
  std::vector<int> all_ways_;
  std::vector<std::string> labels_;
  std::vector<std::int64_t> valid_counts_;
  std::vector<std::int64_t> capacities_;
};

}  // namespace btblab
