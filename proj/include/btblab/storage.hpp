#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "btblab/core.hpp"

namespace btblab {

inline constexpr double kBitsPerKb = 8192.0;
inline constexpr int kBtbxWays = 8;
inline constexpr int kPageOffsetBits = 12;  // 4 KB pages

// Bit-level description of a BTB-X + BTB-XC pair. Every way shares the same
// per-entry overhead; only the offset field width differs.
struct BtbxGeometry {
  std::int64_t sets = 0;
  std::array<int, kBtbxWays> way_widths{};
  int tag_bits = 12;
  int type_bits = 2;
  int valid_bits = 1;
  int lru_bits = 3;
  std::int64_t xc_entries = 0;
  int xc_tag_bits = 15;
  int xc_target_bits = 46;
  IsaProfile isa{};

  static BtbxGeometry arm64(std::int64_t sets);
  static BtbxGeometry x86(std::int64_t sets);
  static BtbxGeometry for_isa(const IsaProfile& isa, std::int64_t sets);

  int entry_overhead_bits() const { return valid_bits + tag_bits + type_bits + lru_bits; }
  int offset_bits_per_set() const;
  int set_bits() const { return kBtbxWays * entry_overhead_bits() + offset_bits_per_set(); }
  int xc_entry_bits() const { return valid_bits + xc_tag_bits + type_bits + xc_target_bits; }
  int widest_way() const { return way_widths.back(); }
  std::int64_t branch_capacity() const { return sets * kBtbxWays + xc_entries; }

  // Throws std::invalid_argument.
  void validate() const;
};

std::int64_t btbx_total_bits(const BtbxGeometry& g);

struct ConvGeometry {
  int valid_bits = 1;
  int tag_bits = 12;
  int type_bits = 2;
  int target_bits = 46;
  int lru_bits = 3;

  // 64-bit entries; the tag absorbs whatever the target field does not use.
  static ConvGeometry for_isa(const IsaProfile& isa);
  int entry_bits() const { return valid_bits + tag_bits + type_bits + target_bits + lru_bits; }
};

std::int64_t conv_capacity(std::int64_t budget_bits, const ConvGeometry& g);

// One row of the published PDede budget split. Capacities are looked up, not
// derived, because the per-field widths behind them are not fully known.
struct PdedePreset {
  double budget_kb = 0;
  double page_btb_kb = 0;
  double main_btb_kb = 0;
  int region_entries = 4;
  double avg_entry_bits = 0;
  std::int64_t branch_capacity = 0;
  std::int64_t main_entries = 0;
  std::int64_t page_entries = 0;
  int page_ptr_bits = 0;
};

// The seven storage budgets of a 256..16K-entry arm64 BTB-X.
struct BudgetPreset {
  std::string label;  // as usually quoted, e.g. "0.9" or "7.25"
  std::int64_t sets = 0;
  std::int64_t budget_bits = 0;
  double budget_kb() const { return budget_bits / kBitsPerKb; }
};

const std::vector<BudgetPreset>& budget_presets();
const std::vector<PdedePreset>& pdede_presets();

// Preset whose budget is within 0.01 KB of kb, or whose label equals kb.
std::optional<BudgetPreset> resolve_budget_kb(double kb);
std::optional<PdedePreset> pdede_preset_for(std::int64_t budget_bits);

// Field split of the PDede page and region tables used by the functional
// model: page entry = valid + partial page number + region pointer (20 bits),
// region entry = valid + region number + 2 LRU bits (22 bits, 4 entries = 88).
struct PdedeFieldLayout {
  int partial_page_bits = 17;
  int region_number_bits = 19;
  int region_ptr_bits = 2;
  int page_entry_bits() const { return 1 + partial_page_bits + region_ptr_bits; }
  int region_entry_bits() const { return 1 + region_number_bits + 2; }
  static PdedeFieldLayout for_isa(const IsaProfile& isa);
};

// R-BTB sized to the same page-table entry count as the PDede preset at this
// budget; the Main-BTB takes the remaining bits.
struct RbtbLayout {
  std::int64_t budget_bits = 0;
  std::int64_t page_entries = 0;
  int page_entry_bits = 0;
  int main_entry_bits = 0;
  std::int64_t main_entries = 0;
  int main_assoc = 8;
};

RbtbLayout rbtb_layout(std::int64_t budget_bits, std::int64_t page_entries, const IsaProfile& isa);

struct StorageReport {
  std::int64_t total_bits = 0;
  double total_kb = 0;
  std::int64_t branch_capacity = 0;
  std::vector<std::pair<std::string, std::int64_t>> breakdown;
};

StorageReport btbx_report(const BtbxGeometry& g);
StorageReport conv_report(std::int64_t entries, const ConvGeometry& g);

struct CapacityRow {
  std::int64_t budget_bits = 0;
  double budget_kb = 0;
  std::int64_t btbx = 0;
  std::optional<std::int64_t> pdede;
  std::int64_t conv = 0;
  double ratio_conv = 0;
  std::optional<double> ratio_pdede;
  bool extrapolated = false;  // budget is not one of the seven presets
  std::vector<std::string> warnings;
};

// BTB-X branches that fit in budget_bits for the given ISA. For a budget that
// is exactly a power-of-two-set geometry this is sets*8 + sets/8; otherwise
// the per-branch density of the ISA's geometry is applied.
std::int64_t btbx_capacity_at_budget(std::int64_t budget_bits, const IsaProfile& isa);

std::vector<CapacityRow> capacity_table(const std::vector<std::int64_t>& budgets_bits,
                                        const IsaProfile& isa);
std::string capacity_csv(const std::vector<CapacityRow>& rows);

std::int64_t kb_to_bits(double kb);

}  // namespace btblab
