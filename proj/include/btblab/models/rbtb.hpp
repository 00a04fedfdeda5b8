#pragma once

#include <vector>

#include "btblab/models/model.hpp"
#include "btblab/models/set_assoc.hpp"
#include "btblab/models/side_table.hpp"
#include "btblab/storage.hpp"

namespace btblab {

// Reduced BTB: the Main-BTB keeps the page offset of each target and a pointer
// into a fully associative Page-BTB holding each target page number once.
class RBtb final : public BtbModel {
 public:
  RBtb(std::int64_t main_entries, int assoc, std::int64_t page_entries, const IsaProfile& isa);

  std::string name() const override { return "rbtb"; }
  const IsaProfile& isa() const override { return isa_; }
  std::optional<Prediction> lookup(Addr pc) override;
  UpdateOutcome commit_update(const BranchRecord& record) override;
  void reset() override;

  std::int64_t capacity() const override { return sets_ * assoc_; }
  const std::vector<std::string>& source_labels() const override { return labels_; }
  std::span<const std::int64_t> valid_counts() const override { return valid_counts_; }
  std::span<const std::int64_t> source_capacities() const override { return capacities_; }
  std::uint64_t stale_lookups() const override { return stale_lookups_; }

  const SideTable& page_btb() const { return pages_; }

 private:
  struct Entry {
    std::uint64_t tag = 0;
    std::uint64_t page_offset = 0;
    SideTable::Ref page;
    BranchKind kind = BranchKind::conditional;
  };

  std::size_t slot(std::int64_t set, int way) const {
    return static_cast<std::size_t>(set * assoc_ + way);
  }
  std::optional<int> find_way(std::int64_t set, std::uint64_t tag) const;
  std::optional<Addr> rebuild(const Entry& e) const;
  void write(Entry& e, const BranchRecord& record);

  IsaProfile isa_;
  std::int64_t sets_;
  int assoc_;
  SetIndexer index_;
  std::vector<std::uint8_t> valid_;
  std::vector<Entry> entries_;
  LruAges lru_;
  SideTable pages_;
  std::vector<int> all_ways_;
  std::vector<std::string> labels_;
  std::vector<std::int64_t> valid_counts_;
  std::vector<std::int64_t> capacities_;
  std::uint64_t stale_lookups_ = 0;
};

}  // namespace btblab
