#include <doctest.h>

#include <cmath>
#include <string>

#include <fmt/core.h>

#include "btblab/storage.hpp"

using namespace btblab;

namespace {

// Budget labels carry their own precision ("7.25" vs "14.5").
std::string round_like(double kb, const std::string& label) {
  const auto dot = label.find('.');
  const int decimals = dot == std::string::npos ? 0 : static_cast<int>(label.size() - dot - 1);
  const double scale = std::pow(10.0, decimals);
  return fmt::format("{:.{}f}", std::floor(kb * scale + 0.5) / scale, decimals);
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace

TEST_CASE("btb-x storage rows") {
  struct Row {
    std::int64_t sets;
    std::int64_t bits;
    const char* kb;
  };
  const Row rows[] = {{32, 7424, "0.9"},     {64, 14848, "1.8"},   {128, 29696, "3.6"},  {256, 59392, "7.25"},
                      {512, 118784, "14.5"}, {1024, 237568, "29"}, {2048, 475136, "58"}};
  for (const auto& row : rows) {
    const auto g = BtbxGeometry::arm64(row.sets);
    CHECK(g.set_bits() == 224);
    CHECK(g.xc_entry_bits() == 64);
    CHECK(g.xc_entries == row.sets / 8);
    CHECK(btbx_total_bits(g) == row.sets * 224 + (row.sets / 8) * 64);
    CHECK(btbx_total_bits(g) == row.bits);
    CHECK(round_like(btbx_total_bits(g) / 8192.0, row.kb) == std::string(row.kb));
  }
  CHECK(btbx_total_bits(BtbxGeometry::arm64(32)) / 8192.0 == doctest::Approx(0.90625));
}

TEST_CASE("btb-x geometry validation") {
  CHECK_THROWS_AS(btbx_total_bits(BtbxGeometry::arm64(0)), std::invalid_argument);
  CHECK_THROWS_AS(btbx_total_bits(BtbxGeometry::arm64(48)), std::invalid_argument);
  auto g = BtbxGeometry::arm64(64);
  g.way_widths = {0, 4, 5, 7, 9, 19, 11, 25};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("doubling sets doubles storage") {
  for (std::int64_t sets = 8; sets < 4096; sets *= 2) {
    CHECK(btbx_total_bits(BtbxGeometry::arm64(2 * sets)) == 2 * btbx_total_bits(BtbxGeometry::arm64(sets)));
  }
}

TEST_CASE("entry compositions") {
  const auto conv = ConvGeometry::for_isa(IsaProfile::arm64());
  CHECK(conv.entry_bits() == 64);
  CHECK(conv.tag_bits == 12);
  const auto conv86 = ConvGeometry::for_isa(IsaProfile::x86());
  CHECK(conv86.entry_bits() == 64);
  CHECK(conv86.target_bits == 48);

  const auto x86 = BtbxGeometry::x86(512);
  CHECK(x86.offset_bits_per_set() == 86);
  CHECK(x86.set_bits() == 230);
  CHECK(x86.xc_entry_bits() == 64);
  CHECK(BtbxGeometry::arm64(512).offset_bits_per_set() == 80);

  const auto pd = PdedeFieldLayout::for_isa(IsaProfile::arm64());
  CHECK(4 * pd.region_entry_bits() == 88);
  CHECK(near(4 * pd.region_entry_bits() / 8192.0, 0.0107, 5e-5));
  CHECK(pd.page_entry_bits() == 20);
}

TEST_CASE("conv capacity") {
  const auto g = ConvGeometry{};
  CHECK(conv_capacity(118784, g) == 1856);
  CHECK(conv_capacity(7424, g) == 116);
  CHECK(conv_capacity(64, g) == 1);
  CHECK(conv_capacity(63, g) == 0);
}

TEST_CASE("capacity table, arm64") {
  std::vector<std::int64_t> bits;
  for (const auto& p : budget_presets()) bits.push_back(p.budget_bits);
  const auto rows = capacity_table(bits, IsaProfile::arm64());
  const std::int64_t conv[] = {116, 232, 464, 928, 1856, 3712, 7424};
  const std::int64_t pdede[] = {210, 415, 820, 1617, 3190, 6292, 12405};
  REQUIRE(rows.size() == 7);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto sets = budget_presets()[i].sets;
    CHECK(rows[i].conv == conv[i]);
    CHECK(rows[i].btbx == sets * 8 + sets / 8);
    CHECK(rows[i].pdede == pdede[i]);
    CHECK(near(rows[i].ratio_conv, 2.24, 0.01));
    CHECK_FALSE(rows[i].extrapolated);
    CHECK(rows[i].warnings.empty());
  }
  CHECK(rows[4].btbx == 4160);
  CHECK(near(static_cast<double>(rows[4].btbx) / rows[4].conv, 2.2414, 1e-4));
  CHECK(near(*rows[0].ratio_pdede, 1.24, 0.01));
  CHECK(near(*rows[6].ratio_pdede, 1.341, 0.001));
}

TEST_CASE("capacity table, x86") {
  const auto rows = capacity_table({118784}, IsaProfile::x86());
  CHECK(near(rows[0].ratio_conv, 2.18, 0.01));
}

TEST_CASE("off-preset budgets are flagged") {
  const auto rows = capacity_table({64}, IsaProfile::arm64());
  CHECK(rows[0].conv == 1);
  CHECK(rows[0].extrapolated);
  CHECK_FALSE(rows[0].pdede.has_value());
  CHECK(rows[0].warnings.size() == 2);
  const auto csv = capacity_csv(rows);
  CHECK(csv.rfind("budget_kb,btbx,pdede,conv,ratio_conv,ratio_pdede\n", 0) == 0);
}

TEST_CASE("pdede presets") {
  for (const auto& p : pdede_presets()) {
    const double derived = p.main_btb_kb * 8192.0 / p.avg_entry_bits;
    CHECK(near(static_cast<double>(p.main_entries), derived, 0.005 * derived));
    CHECK(p.region_entries == 4);
    CHECK((std::int64_t{1} << p.page_ptr_bits) == p.page_entries);
  }
}

TEST_CASE("budget resolution") {
  CHECK(resolve_budget_kb(14.5)->sets == 512);
  CHECK(resolve_budget_kb(0.9)->sets == 32);
  CHECK(resolve_budget_kb(1.8)->sets == 64);
  CHECK(resolve_budget_kb(3.6)->sets == 128);
  CHECK(resolve_budget_kb(3.625)->sets == 128);
  CHECK_FALSE(resolve_budget_kb(14.0).has_value());
  CHECK_FALSE(resolve_budget_kb(20).has_value());
  CHECK(kb_to_bits(14.5) == 118784);
}

TEST_CASE("r-btb layout at 14.5 KB") {
  const auto l = rbtb_layout(118784, 512, IsaProfile::arm64());
  CHECK(l.page_entry_bits == 37);
  CHECK(l.main_entry_bits == 37);
  CHECK(l.main_entries == 2696);
  CHECK(l.main_entries * l.main_entry_bits + l.page_entries * l.page_entry_bits <= 118784);
}

TEST_CASE("storage reports") {
  const auto r = btbx_report(BtbxGeometry::arm64(512));
  std::int64_t sum = 0;
  for (const auto& [name, bits] : r.breakdown) sum += bits;
  CHECK(sum == r.total_bits);
  CHECK(r.total_kb == doctest::Approx(14.5));
  CHECK(r.branch_capacity == 4160);
  const auto c = conv_report(1856, ConvGeometry{});
  CHECK(c.total_bits == 118784);
}
