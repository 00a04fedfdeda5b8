#pragma once

#include <optional>
#include <vector>

#include "btblab/models/model.hpp"
#include "btblab/models/set_assoc.hpp"
#include "btblab/storage.hpp"

namespace btblab {

// 8-way set-associative BTB whose ways hold target offsets of different
// widths, plus the direct-mapped BTB-XC for offsets wider than the widest way.
// Sources 0..7 are the ways, source 8 is BTB-XC.
class BtbX final : public BtbModel {
 public:
  static constexpr int kXcSource = kBtbxWays;

  explicit BtbX(const BtbxGeometry& geometry);

  std::string name() const override { return "btbx"; }
  const IsaProfile& isa() const override { return geometry_.isa; }
  std::optional<Prediction> lookup(Addr pc) override;
  UpdateOutcome commit_update(const BranchRecord& record) override;
  void reset() override;

  std::int64_t capacity() const override { return geometry_.branch_capacity(); }
  const std::vector<std::string>& source_labels() const override { return labels_; }
  std::span<const std::int64_t> valid_counts() const override { return valid_counts_; }
  std::span<const std::int64_t> source_capacities() const override { return capacities_; }

  const BtbxGeometry& geometry() const { return geometry_; }

  // Ways whose offset field can hold `width` bits: a suffix of 0..7.
  std::vector<int> eligible_ways(int width) const;

  // Where pc currently lives (way index, kXcSource) without touching recency.
  std::optional<int> resident_source(Addr pc) const;

  // Recency ages of one set, for inspection.
  std::span<const std::uint32_t> set_ages(std::int64_t set) const { return lru_.set_ages(set); }
  std::int64_t set_index(Addr pc) const { return index_.index(pc); }

 private:
  struct Entry {
    std::uint64_t tag = 0;
    std::uint64_t offset = 0;
    BranchKind kind = BranchKind::conditional;
  };
  struct XcEntry {
    bool valid = false;
    std::uint64_t tag = 0;
    Addr target = 0;
    BranchKind kind = BranchKind::conditional;
  };

  std::size_t slot(std::int64_t set, int way) const {
    return static_cast<std::size_t>(set * kBtbxWays + way);
  }
  std::optional<int> find_way(std::int64_t set, std::uint64_t tag) const;
  std::int64_t xc_index(Addr pc) const;
  std::uint64_t xc_tag(Addr pc) const;
  Addr way_target(Addr pc, int way, const Entry& e) const;
  UpdateOutcome allocate(const BranchRecord& record, int width, UpdateAction action);
  void invalidate(std::int64_t set, int way);

  BtbxGeometry geometry_;
  SetIndexer index_;
  int xc_index_bits_;
  std::vector<std::uint8_t> valid_;
  std::vector<Entry> entries_;
  std::vector<XcEntry> xc_;
  LruAges lru_;
  std::vector<std::string> labels_;
  std::vector<std::int64_t> valid_counts_;
  std::vector<std::int64_t> capacities_;
};

}  // namespace btblab
