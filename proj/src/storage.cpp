#include "btblab/storage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

namespace btblab {

namespace {

bool is_pow2(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

BtbxGeometry BtbxGeometry::arm64(std::int64_t sets) {
  return for_isa(IsaProfile::arm64(), sets);
}

BtbxGeometry BtbxGeometry::x86(std::int64_t sets) { return for_isa(IsaProfile::x86(), sets); }

BtbxGeometry BtbxGeometry::for_isa(const IsaProfile& isa, std::int64_t sets) {
  BtbxGeometry g;
  g.sets = sets;
  g.isa = isa;
  if (isa.aligned()) {
    g.way_widths = {0, 4, 5, 7, 9, 11, 19, 25};
  } else {
    g.way_widths = {0, 5, 6, 7, 9, 12, 20, 27};
  }
  g.xc_target_bits = isa.max_stored_target_bits();
  // XC entries stay 64 bits: the tag gives up what a wider target takes.
  g.xc_tag_bits = 64 - (g.valid_bits + g.type_bits + g.xc_target_bits);
  g.xc_entries = std::max<std::int64_t>(1, sets / 8);
  return g;
}

int BtbxGeometry::offset_bits_per_set() const {
  return std::accumulate(way_widths.begin(), way_widths.end(), 0);
}

void BtbxGeometry::validate() const {
  isa.validate();
  if (!is_pow2(sets)) {
    throw std::invalid_argument(fmt::format("BTB-X sets must be a positive power of two, got {}", sets));
  }
  if (!is_pow2(xc_entries)) {
    throw std::invalid_argument(
        fmt::format("BTB-XC entries must be a positive power of two, got {}", xc_entries));
  }
  if (!std::is_sorted(way_widths.begin(), way_widths.end())) {
    throw std::invalid_argument("BTB-X way widths must be non-decreasing");
  }
  if (way_widths.front() < 0 || way_widths.back() > isa.max_stored_target_bits()) {
    throw std::invalid_argument("BTB-X way widths outside [0, max stored target bits]");
  }
  if (tag_bits <= 0 || tag_bits > 64 || xc_tag_bits <= 0 || xc_tag_bits > 64) {
    throw std::invalid_argument("tag widths must be in [1, 64]");
  }
  if (xc_target_bits != isa.max_stored_target_bits()) {
    throw std::invalid_argument("BTB-XC must store full targets");
  }
}

std::int64_t btbx_total_bits(const BtbxGeometry& g) {
  g.validate();
  return g.sets * g.set_bits() + g.xc_entries * g.xc_entry_bits();
}

ConvGeometry ConvGeometry::for_isa(const IsaProfile& isa) {
  ConvGeometry g;
  g.target_bits = isa.max_stored_target_bits();
  g.tag_bits = 64 - (g.valid_bits + g.type_bits + g.target_bits + g.lru_bits);
  return g;
}

std::int64_t conv_capacity(std::int64_t budget_bits, const ConvGeometry& g) {
  if (budget_bits <= 0) return 0;
  return budget_bits / g.entry_bits();
}

const std::vector<BudgetPreset>& budget_presets() {
  static const std::vector<BudgetPreset> presets = [] {
    const std::vector<std::pair<std::string, std::int64_t>> rows = {
        {"0.9", 32}, {"1.8", 64}, {"3.6", 128}, {"7.25", 256},
        {"14.5", 512}, {"29", 1024}, {"58", 2048}};
    std::vector<BudgetPreset> out;
    for (const auto& [label, sets] : rows) {
      out.push_back({label, sets, btbx_total_bits(BtbxGeometry::arm64(sets))});
    }
    return out;
  }();
  return presets;
}

const std::vector<PdedePreset>& pdede_presets() {
  // page pointer width = log2(page entries); page entries halve with budget.
  static const std::vector<PdedePreset> presets = {
      {0.90625, 0.078, 0.817, 4, 32.0, 210, 210, 32, 5},
      {1.8125, 0.156, 1.645, 4, 32.5, 415, 415, 64, 6},
      {3.625, 0.312, 3.3, 4, 33.0, 820, 820, 128, 7},
      {7.25, 0.625, 6.6, 4, 33.5, 1617, 1617, 256, 8},
      {14.5, 1.25, 13.2, 4, 34.0, 3190, 3190, 512, 9},
      {29.0, 2.5, 26.5, 4, 34.5, 6292, 6292, 1024, 10},
      {58.0, 5.0, 53.0, 4, 35.0, 12405, 12405, 2048, 11},
  };
  return presets;
}

std::optional<BudgetPreset> resolve_budget_kb(double kb) {
  for (const auto& p : budget_presets()) {
    if (std::abs(kb - p.budget_kb()) <= 0.01 + 1e-12) return p;
    if (std::abs(kb - std::stod(p.label)) <= 1e-9) return p;
  }
  return std::nullopt;
}

std::optional<PdedePreset> pdede_preset_for(std::int64_t budget_bits) {
  for (const auto& p : pdede_presets()) {
    if (kb_to_bits(p.budget_kb) == budget_bits) return p;
  }
  return std::nullopt;
}

PdedeFieldLayout PdedeFieldLayout::for_isa(const IsaProfile& isa) {
  PdedeFieldLayout l;
  l.region_number_bits = isa.va_bits - kPageOffsetBits - l.partial_page_bits;
  return l;
}

RbtbLayout rbtb_layout(std::int64_t budget_bits, std::int64_t page_entries, const IsaProfile& isa) {
  RbtbLayout l;
  l.budget_bits = budget_bits;
  l.page_entries = page_entries;
  l.page_entry_bits = 1 + (isa.va_bits - kPageOffsetBits);
  const int ptr_bits = std::max(1, static_cast<int>(std::bit_width(
                                       static_cast<std::uint64_t>(std::max<std::int64_t>(page_entries - 1, 1)))));
  const ConvGeometry conv{};
  l.main_entry_bits = conv.valid_bits + conv.tag_bits + conv.type_bits +
                      (kPageOffsetBits - isa.align_shift) + ptr_bits + conv.lru_bits;
  const std::int64_t remaining = budget_bits - page_entries * l.page_entry_bits;
  const std::int64_t raw = remaining > 0 ? remaining / l.main_entry_bits : 0;
  l.main_entries = raw - raw % l.main_assoc;
  return l;
}

StorageReport btbx_report(const BtbxGeometry& g) {
  StorageReport r;
  r.total_bits = btbx_total_bits(g);
  r.total_kb = r.total_bits / kBitsPerKb;
  r.branch_capacity = g.branch_capacity();
  const std::int64_t entries = g.sets * kBtbxWays;
  r.breakdown = {
      {"valid", entries * g.valid_bits},
      {"tag", entries * g.tag_bits},
      {"type", entries * g.type_bits},
      {"lru", entries * g.lru_bits},
      {"offsets", g.sets * g.offset_bits_per_set()},
      {"xc", g.xc_entries * g.xc_entry_bits()},
  };
  return r;
}

StorageReport conv_report(std::int64_t entries, const ConvGeometry& g) {
  StorageReport r;
  r.total_bits = entries * g.entry_bits();
  r.total_kb = r.total_bits / kBitsPerKb;
  r.branch_capacity = entries;
  r.breakdown = {
      {"valid", entries * g.valid_bits},
      {"tag", entries * g.tag_bits},
      {"type", entries * g.type_bits},
      {"target", entries * g.target_bits},
      {"lru", entries * g.lru_bits},
  };
  return r;
}

std::int64_t btbx_capacity_at_budget(std::int64_t budget_bits, const IsaProfile& isa) {
  if (budget_bits <= 0) return 0;
  for (std::int64_t sets = 8; sets <= (std::int64_t{1} << 40); sets *= 2) {
    const auto g = BtbxGeometry::for_isa(isa, sets);
    const std::int64_t bits = btbx_total_bits(g);
    if (bits == budget_bits) return g.branch_capacity();
    if (bits > budget_bits) break;
  }
  // Eight sets hold 65 branches (64 in BTB-X, one in BTB-XC).
  const auto g = BtbxGeometry::for_isa(isa, 8);
  const std::int64_t bits_per_65 = std::int64_t{8} * g.set_bits() + g.xc_entry_bits();
  return budget_bits * 65 / bits_per_65;
}

std::vector<CapacityRow> capacity_table(const std::vector<std::int64_t>& budgets_bits,
                                        const IsaProfile& isa) {
  const ConvGeometry conv = ConvGeometry::for_isa(isa);
  std::vector<CapacityRow> rows;
  rows.reserve(budgets_bits.size());
  for (const std::int64_t bits : budgets_bits) {
    CapacityRow row;
    row.budget_bits = bits;
    row.budget_kb = bits / kBitsPerKb;
    row.btbx = btbx_capacity_at_budget(bits, isa);
    row.conv = conv_capacity(bits, conv);
    row.ratio_conv = row.conv > 0 ? static_cast<double>(row.btbx) / static_cast<double>(row.conv) : 0.0;
    row.extrapolated = std::none_of(budget_presets().begin(), budget_presets().end(),
                                    [&](const BudgetPreset& p) { return p.budget_bits == bits; });
    if (row.extrapolated) {
      row.warnings.push_back(fmt::format("budget {} bits is not a preset BTB-X size; BTB-X column extrapolated", bits));
    }
    if (auto preset = pdede_preset_for(bits)) {
      row.pdede = preset->branch_capacity;
      row.ratio_pdede = static_cast<double>(row.btbx) / static_cast<double>(preset->branch_capacity);
    } else {
      row.warnings.push_back(fmt::format("no PDede preset for budget {} bits; PDede column omitted", bits));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string capacity_csv(const std::vector<CapacityRow>& rows) {
  std::string out = "budget_kb,btbx,pdede,conv,ratio_conv,ratio_pdede\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.4f},{}\n", r.budget_kb, r.btbx,
                       r.pdede ? fmt::format("{}", *r.pdede) : std::string{}, r.conv, r.ratio_conv,
                       r.ratio_pdede ? fmt::format("{:.4f}", *r.ratio_pdede) : std::string{});
  }
  return out;
}

std::int64_t kb_to_bits(double kb) {
  return static_cast<std::int64_t>(std::floor(kb * kBitsPerKb + 0.5));
}

}  // namespace btblab
