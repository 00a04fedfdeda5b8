// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "btblab/generator.hpp"
#include "btblab/models/btbx.hpp"
#include "btblab/sim.hpp"
#include "btblab/storage.hpp"
#include "support/reference_btbx.hpp"

using namespace btblab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::vector<TraceFile> g_traces;  // every trace built here, for criterion 9

std::string round_like(double kb, const std::string& label) {
  const auto dot = label.find('.');
  const int decimals = dot == std::string::npos ? 0 : static_cast<int>(label.size() - dot - 1);
  const double scale = std::pow(10.0, decimals);
  return fmt::format("{:.{}f}", std::floor(kb * scale + 0.5) / scale, decimals);
}

bool within(double value, double expected, double tol) { return std::abs(value - expected) <= tol + 1e-12; }

Outcome storage_table() {
  const char* labels[] = {"0.9", "1.8", "3.6", "7.25", "14.5", "29", "58"};
  const std::int64_t raw[] = {7424, 14848, 29696, 59392, 118784, 237568, 475136};
  std::string got;
  bool ok = budget_presets().size() == 7;
  for (std::size_t i = 0; i < 7 && ok; ++i) {
    const auto bits = btbx_total_bits(BtbxGeometry::arm64(budget_presets()[i].sets));
    const auto kb = round_like(static_cast<double>(bits) / 8192.0, labels[i]);
    ok = ok && bits == raw[i] && kb == labels[i];
    got += (i ? " " : "") + kb;
  }
  return {ok, "KB column " + got};
}

Outcome capacity_table_check() {
  const std::int64_t conv[] = {116, 232, 464, 928, 1856, 3712, 7424};
  std::vector<std::int64_t> bits;
  for (const auto& p : budget_presets()) bits.push_back(p.budget_bits);
  const auto rows = capacity_table(bits, IsaProfile::arm64());
  bool ok = rows.size() == 7;
  double lo = 1e9, hi = 0;
  for (std::size_t i = 0; i < rows.size() && ok; ++i) {
    const auto sets = budget_presets()[i].sets;
    ok = ok && rows[i].conv == conv[i] && rows[i].btbx == sets * 8 + sets / 8 && within(rows[i].ratio_conv, 2.24, 0.01);
    lo = std::min(lo, rows[i].ratio_conv);
    hi = std::max(hi, rows[i].ratio_conv);
  }
  const double pd_small = rows.at(0).ratio_pdede.value_or(0);
  const double pd_large = rows.at(6).ratio_pdede.value_or(0);
  ok = ok && within(pd_small, 1.24, 0.01) && within(pd_large, 1.34, 0.01);
  const auto x86 = capacity_table(bits, IsaProfile::x86());
  double x_lo = 1e9, x_hi = 0;
  for (const auto& r : x86) {
    ok = ok && within(r.ratio_conv, 2.18, 0.01);
    x_lo = std::min(x_lo, r.ratio_conv);
    x_hi = std::max(x_hi, r.ratio_conv);
  }
  return {ok, fmt::format("btbx/conv {:.4f}..{:.4f}, btbx/pdede {:.4f} (0.9KB) {:.4f} (58KB), x86 {:.4f}..{:.4f}", lo,
                          hi, pd_small, pd_large, x_lo, x_hi)};
}

int msb(std::uint64_t v) {
  int n = 0;
  for (; v; v >>= 1) ++n;
  return n;
}

Outcome codec_property() {
  std::int64_t violations = 0;
  for (const auto& isa : {IsaProfile::arm64(), IsaProfile::x86()}) {
    std::mt19937_64 rng(isa.align_shift == 0 ? 86 : 64);
    const std::uint64_t va = low_mask(isa.va_bits), align = low_mask(isa.align_shift);
    for (int i = 0; i < 1'000'000; ++i) {
      const Addr pc = rng() & va & ~align;
      const int span = static_cast<int>(rng() % static_cast<std::uint64_t>(isa.va_bits + 1));
      const Addr target = ((pc & ~low_mask(span)) | (rng() & low_mask(span))) & va & ~align;
      const auto enc = encode_offset(pc, target, isa);
      bool ok = enc.stored_width == std::max(msb(pc ^ target) - isa.align_shift, 0) &&
                decode_target(pc, enc, isa) == target;
      if (enc.stored_width > 0) {
        ok = ok && decode_target(pc, encode_offset_at_width(target, enc.stored_width - 1, isa), isa) != target;
      }
      violations += !ok;
    }
  }
  return {violations == 0, fmt::format("2x10^6 pairs, {} violations", violations)};
}

Outcome fig3_vector() {
  const auto isa = IsaProfile::arm64();
  const Addr pc = 0b101101000, target = 0b101111000;
  const auto enc = encode_offset(pc, target, isa);
  const auto bits = fmt::format("{:0{}b}", enc.bits, enc.stored_width);
  const bool ok = enc.stored_width == 3 && bits == "110" && decode_target(pc, enc, isa) == target;
  return {ok, fmt::format("stored_width {} bits {}", enc.stored_width, bits)};
}

Outcome lru_oracle() {
  const auto g = BtbxGeometry::arm64(2);
  std::int64_t events = 0;
  int mismatched_seeds = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorSpec spec;
    spec.static_branches = 64;
    spec.records = 10'000;
    spec.seed = seed;
    spec.pattern = AccessPattern::uniform;
    spec.taken_rate = 0.7;
    spec.widths = parse_width_buckets("0-4:0.4,5-11:0.3,12-25:0.2,26-40:0.1");
    const auto trace = generate(spec);
    g_traces.push_back(trace);

    BtbX btb(g);
    reftest::ReferenceBtbx ref(g.sets, g.way_widths, g.isa.align_shift, g.tag_bits, static_cast<int>(g.xc_entries),
                               g.xc_tag_bits);
    std::string lib_stream, ref_stream;
    for (const auto& r : trace.records) {
      lib_stream += reftest::describe_lookup(btb.lookup(r.pc)) + "\n";
      ref_stream += ref.lookup(r.pc) + "\n";
      ++events;
      if (!r.taken) continue;
      lib_stream += reftest::describe_update(btb.commit_update(r)) + "\n";
      ref_stream += ref.update(r) + "\n";
      ++events;
    }
    mismatched_seeds += lib_stream != ref_stream;
  }
  return {mismatched_seeds == 0, fmt::format("10 seeds, {} events, {} mismatched streams", events, mismatched_seeds)};
}

Outcome distribution_fidelity() {
  GeneratorSpec spec;
  spec.static_branches = 100'000;
  spec.records = 100'000;
  spec.widths = parse_width_buckets("0-6:0.54,7-10:0.22,11-25:0.23,26-46:0.01");
  spec.seed = 6;
  const auto trace = generate(spec);
  g_traces.push_back(trace);
  const double c6 = offset_histogram(trace).cumulative(6);
  return {within(c6, 0.54, 0.02), fmt::format("cumulative at width 6 = {:.4f}", c6)};
}

Outcome mpki_ordering() {
  GeneratorSpec spec;
  spec.static_branches = 3000;
  spec.records = 60'000;
  spec.widths = parse_width_buckets("0-4:0.75,5-8:0.20,9-19:0.042,28-46:0.008");
  spec.kind_mix = parse_kind_mix("cond:0.8,uncond:0.1,call:0.1");
  spec.pattern = AccessPattern::round_robin;
  spec.seed = 7;
  const auto trace = generate(spec);
  g_traces.push_back(trace);

  auto rate = [&](ModelKind kind) {
    ModelSpec s;
    s.kind = kind;
    s.budget_kb = 14.5;
    auto model = make_model(s);
    return run(*model, trace).miss_rate();
  };
  const double conv = rate(ModelKind::conv), pdede = rate(ModelKind::pdede), btbx = rate(ModelKind::btbx);
  const bool ok = conv > pdede && pdede > btbx && btbx < 0.01 && conv > 0.9;
  return {ok, fmt::format("miss rate conv {:.4f} pdede {:.4f} btbx {:.4f}", conv, pdede, btbx)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / fmt::format("btblab-acceptance-{}", std::random_device{}());
  fs::create_directories(dir);
  const std::string cd = "cd '" + dir.string() + "' && " + BTBLAB_CLI_PATH + " ";
  const std::vector<std::string> commands = {
      "gen-trace --branches 2000 --records 40000 --pattern zipf --seed 11 -o t.btbt",
      "gen-trace --branches 500 --records 5000 --seed 12 -o t.jsonl",
      "simulate --model btbx --budget-kb 14.5 t.btbt -o sim.json",
      "simulate --model pdede --budget-kb 1.8 t.jsonl -o sim2.json",
      "compare --budget-kb 3.6 t.btbt -o cmp.csv",
      "analyze-offsets t.btbt -o hist.csv",
  };
  std::vector<std::string> first;
  bool ok = true;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<std::string> snapshot;
    for (const auto& c : commands) ok = ok && std::system((cd + c + " >/dev/null 2>&1").c_str()) == 0;
    for (const char* f : {"t.btbt", "t.jsonl", "sim.json", "sim2.json", "cmp.csv", "hist.csv"}) {
      snapshot.push_back(slurp(dir / f));
      snapshot.push_back(slurp(dir / (std::string(f) + ".manifest.json")));
    }
    if (pass == 0) {
      first = snapshot;
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove(entry.path());
    } else {
      ok = ok && snapshot == first;
    }
  }
  int empty = 0;
  for (const auto& s : first) empty += s.empty();
  ok = ok && empty == 0;
  fs::remove_all(dir);
  return {ok, fmt::format("{} commands run twice, {} files compared byte for byte", commands.size(), first.size())};
}

Outcome accounting_identity() {
  std::int64_t runs = 0, violations = 0;
  for (const auto& trace : g_traces) {
    for (auto kind : {ModelKind::conv, ModelKind::rbtb, ModelKind::pdede, ModelKind::btbx}) {
      ModelSpec s;
      s.kind = kind;
      s.budget_kb = 14.5;
      s.isa = trace.isa;
      auto model = make_model(s);
      const auto m = run(*model, trace);
      violations += m.hits() + m.taken_btb_misses != m.taken_branches;
      ++runs;
    }
    const auto h = offset_histogram(trace);
    violations += h.total > 0 && h.cumulative(h.counts.size() - 1) != 1.0;
    violations += h.csv().find(",1.000000\n", h.csv().size() - 12) == std::string::npos;
  }
  return {violations == 0 && runs > 0,
          fmt::format("{} traces, {} model runs, {} violations", g_traces.size(), runs, violations)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"storage table", storage_table},
      {"capacity table", capacity_table_check},
      {"offset codec property", codec_property},
      {"worked offset example", fig3_vector},
      {"restricted-LRU oracle", lru_oracle},
      {"distribution fidelity", distribution_fidelity},
      {"miss-rate ordering", mpki_ordering},
      {"determinism", determinism},
      {"accounting identity", accounting_identity},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << fmt::format("criterion {} {}: {} ({})", index, name, o.pass ? "PASS" : "FAIL", o.detail) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
