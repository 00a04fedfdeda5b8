#pragma once

#include <vector>

#include "btblab/models/model.hpp"
#include "btblab/models/set_assoc.hpp"
#include "btblab/models/side_table.hpp"
#include "btblab/storage.hpp"

namespace btblab {

struct PdedeConfig {
  std::int64_t main_sets = 0;
  int main_assoc = 8;  // the lower half of the ways is reserved for same-page branches
  std::int64_t page_entries = 512;
  int page_assoc = 16;
  int region_entries = 4;
};

// PDede: Main-BTB + set-associative Page-BTB + tiny fully associative
// Region-BTB. Same-page branches rebuild their target from the branch PC and
// never touch the side tables.
class PdedeBtb final : public BtbModel {
 public:
  PdedeBtb(const PdedeConfig& config, const IsaProfile& isa);

  std::string name() const override { return "pdede"; }
  const IsaProfile& isa() const override { return isa_; }
  std::optional<Prediction> lookup(Addr pc) override;
  UpdateOutcome commit_update(const BranchRecord& record) override;
  void reset() override;

  std::int64_t capacity() const override { return config_.main_sets * config_.main_assoc; }
  const std::vector<std::string>& source_labels() const override { return labels_; }
  std::span<const std::int64_t> valid_counts() const override { return valid_counts_; }
  std::span<const std::int64_t> source_capacities() const override { return capacities_; }
  std::uint64_t stale_lookups() const override { return stale_lookups_; }

  const PdedeConfig& config() const { return config_; }
  const SideTable& page_btb() const { return pages_; }
  const SideTable& region_btb() const { return regions_; }
  std::uint64_t page_reads() const { return page_reads_; }
  int same_page_ways() const { return config_.main_assoc / 2; }
  bool same_page(const BranchRecord& record) const;

 private:
  struct Entry {
    std::uint64_t tag = 0;
    std::uint64_t page_offset = 0;
    bool same_page = true;
    SideTable::Ref page;
    BranchKind kind = BranchKind::conditional;
  };

  std::size_t slot(std::int64_t set, int way) const {
    return static_cast<std::size_t>(set * config_.main_assoc + way);
  }
  std::optional<int> find_way(std::int64_t set, std::uint64_t tag) const;
  std::optional<Addr> rebuild(Addr pc, const Entry& e, bool count_reads);
  std::int64_t page_set(std::uint64_t page_number) const;
  SideTable::Ref ensure_page(Addr target);
  void write(Entry& e, const BranchRecord& record);

  PdedeConfig config_;
  IsaProfile isa_;
  PdedeFieldLayout layout_;
  SetIndexer index_;
  std::vector<std::uint8_t> valid_;
  std::vector<Entry> entries_;
  LruAges lru_;
  SideTable pages_;
  std::vector<SideTable::Ref> page_region_;  // region pointer per Page-BTB slot
  SideTable regions_;
  std::vector<int> all_ways_;
  std::vector<int> general_ways_;
  std::vector<std::string> labels_;
  std::vector<std::int64_t> valid_counts_;
  std::vector<std::int64_t> capacities_;
  std::uint64_t stale_lookups_ = 0;
  std::uint64_t page_reads_ = 0;
};

}  // namespace btblab
