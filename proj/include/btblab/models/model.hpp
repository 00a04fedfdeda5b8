#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btblab/core.hpp"

namespace btblab {

// What a BTB hands the fetch unit. An empty target means "take it from the
// return address stack"; only return entries produce that.
struct Prediction {
  std::optional<Addr> target;
  BranchKind kind = BranchKind::conditional;
  int source = 0;  // index into BtbModel::source_labels()

  bool from_ras() const { return !target.has_value(); }
};

enum class UpdateAction : std::uint8_t {
  refreshed,  // hit with the right target; recency only
  rewritten,  // hit with a stale target, fixed in place
  migrated,   // stale target no longer fits its slot; moved elsewhere
  allocated,  // miss; new entry written
};

struct UpdateOutcome {
  UpdateAction action = UpdateAction::allocated;
  int source = -1;       // slot (way or side structure) that now holds the branch
  bool evicted = false;  // a valid entry was overwritten to make room
};

struct SourceOccupancy {
  std::string label;
  std::int64_t valid = 0;
  std::int64_t capacity = 0;
};

// Common contract of every BTB organization. lookup() may touch recency state
// but never allocates or evicts; commit_update() is the only path that changes
// contents and is called for taken branches only.
class BtbModel {
 public:
  virtual ~BtbModel() = default;

  virtual std::string name() const = 0;
  virtual const IsaProfile& isa() const = 0;
  virtual std::optional<Prediction> lookup(Addr pc) = 0;
  virtual UpdateOutcome commit_update(const BranchRecord& record) = 0;
  virtual void reset() = 0;

  // Branches the organization can hold at once.
  virtual std::int64_t capacity() const = 0;
  virtual const std::vector<std::string>& source_labels() const = 0;
  // Valid entries per source, maintained incrementally.
  virtual std::span<const std::int64_t> valid_counts() const = 0;
  virtual std::span<const std::int64_t> source_capacities() const = 0;
  // Lookups that found an entry whose side-table pointer had gone stale.
  virtual std::uint64_t stale_lookups() const { return 0; }

  std::vector<SourceOccupancy> occupancy() const;
};

std::string_view action_name(UpdateAction a);

}  // namespace btblab
