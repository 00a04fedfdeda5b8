#include "btblab/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "btblab/generator.hpp"
#include "btblab/sim.hpp"
#include "btblab/storage.hpp"

#ifndef BTBLAB_VERSION
#define BTBLAB_VERSION "dev"
#endif

namespace btblab {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError(TraceErrorCode::io, -1, fmt::format("cannot open {}", path.string()));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

fs::path manifest_path_for(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceError(TraceErrorCode::io, -1, fmt::format("cannot write {}", path.string()));
  out << text;
}

// Writes text to path, or to out when path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

ordered_json file_entry(const fs::path& path) {
  ordered_json j;
  j["path"] = path.generic_string();
  j["sha256"] = sha256_file(path);
  return j;
}

// Paths are recorded as given so that reruns from the same directory with the
// same flags produce the same manifest.
void write_manifest(const std::string& command, ordered_json config, const std::vector<fs::path>& inputs,
                    const fs::path& output) {
  ordered_json m;
  m["schema"] = kManifestSchema;
  m["tool"] = "btblab";
  m["version"] = BTBLAB_VERSION;
  m["command"] = command;
  m["config"] = std::move(config);
  ordered_json in = ordered_json::array();
  for (const auto& p : inputs) in.push_back(file_entry(p));
  m["inputs"] = in;
  m["outputs"] = ordered_json::array({file_entry(output)});
  write_text(manifest_path_for(output), m.dump(2) + "\n");
}

struct GenOptions {
  std::int64_t branches = 3000;
  std::int64_t records = 100000;
  std::string dist;
  std::string kind_mix;
  std::string pattern = "round-robin";
  double zipf_s = 1.0;
  double taken_rate = 1.0;
  double gap_mean = 4.0;
  std::uint64_t seed = 1;
  std::string isa = "arm64";
  std::string out;
};

struct SimOptions {
  std::string model;
  std::string models = "conv,rbtb,pdede,btbx";
  std::optional<double> budget_kb;
  std::optional<std::int64_t> sets;
  std::optional<std::int64_t> warmup;
  std::optional<std::int64_t> measure;
  std::string trace;
  std::string out;
};

SimConfig sim_config(const SimOptions& o) {
  SimConfig c;
  c.warmup_records = o.warmup;
  c.measure_records = o.measure;
  return c;
}

int cmd_gen_trace(const GenOptions& o) {
  GeneratorSpec spec;
  spec.static_branches = o.branches;
  spec.records = o.records;
  if (!o.dist.empty()) spec.widths = parse_width_buckets(o.dist);
  if (!o.kind_mix.empty()) spec.kind_mix = parse_kind_mix(o.kind_mix);
  spec.pattern = parse_pattern(o.pattern);
  spec.zipf_s = o.zipf_s;
  spec.taken_rate = o.taken_rate;
  spec.gap_mean = o.gap_mean;
  spec.seed = o.seed;
  spec.isa = parse_isa(o.isa);
  spec.validate();

  const TraceFile trace = generate(spec);
  write_trace(fs::path(o.out), trace);
  auto config = spec.to_json();
  config["format"] = format_for_path(o.out) == TraceFormat::binary ? "binary" : "jsonl";
  write_manifest("gen-trace", std::move(config), {}, o.out);
  return kExitOk;
}

int cmd_analyze(const std::string& trace_path, const std::string& out_path, std::ostream& out) {
  const TraceFile trace = read_trace(fs::path(trace_path));
  emit(out_path, offset_histogram(trace).csv(), out);
  if (!out_path.empty()) {
    ordered_json config;
    config["isa"] = isa_name(trace.isa);
    write_manifest("analyze-offsets", std::move(config), {trace_path}, out_path);
  }
  return kExitOk;
}

int cmd_capacity(const std::vector<double>& budgets_kb, const std::string& isa_text, const std::string& out_path,
                 std::ostream& out, std::ostream& err) {
  const IsaProfile isa = parse_isa(isa_text);
  std::vector<std::int64_t> bits;
  if (budgets_kb.empty()) {
    for (const auto& p : budget_presets()) bits.push_back(p.budget_bits);
  } else {
    for (double kb : budgets_kb) {
      if (!(kb > 0)) throw std::invalid_argument(fmt::format("budget {} KB must be positive", kb));
      const auto preset = resolve_budget_kb(kb);
      bits.push_back(preset ? preset->budget_bits : kb_to_bits(kb));
    }
  }
  const auto rows = capacity_table(bits, isa);
  for (const auto& row : rows) {
    for (const auto& w : row.warnings) err << "warning: " << w << '\n';
  }
  emit(out_path, capacity_csv(rows), out);
  if (!out_path.empty()) {
    ordered_json config;
    config["isa"] = isa_name(isa);
    config["budget_bits"] = bits;
    write_manifest("capacity-table", std::move(config), {}, out_path);
  }
  return kExitOk;
}

ModelSpec model_spec(std::string_view name, const SimOptions& o, const IsaProfile& isa) {
  const auto kind = parse_model_kind(name);
  if (!kind) throw std::invalid_argument(fmt::format("unknown model '{}' (conv, rbtb, pdede, btbx)", name));
  ModelSpec spec;
  spec.kind = *kind;
  spec.budget_kb = o.budget_kb;
  spec.sets = o.sets;
  spec.isa = isa;
  return spec;
}

int cmd_simulate(const SimOptions& o, std::ostream& out) {
  const TraceFile trace = read_trace(fs::path(o.trace));
  const ModelSpec spec = model_spec(o.model, o, trace.isa);
  auto model = make_model(spec);
  const Metrics m = run(*model, trace, sim_config(o));
  emit(o.out, m.to_json().dump(2) + "\n", out);
  if (!o.out.empty()) {
    ordered_json config;
    config["model"] = describe_model(spec);
    config["sim"] = sim_config(o).to_json();
    write_manifest("simulate", std::move(config), {o.trace}, o.out);
  }
  return kExitOk;
}

int cmd_compare(const SimOptions& o, std::ostream& out) {
  const TraceFile trace = read_trace(fs::path(o.trace));
  std::vector<ModelSpec> specs;
  std::stringstream names(o.models);
  for (std::string name; std::getline(names, name, ',');) {
    if (!name.empty()) specs.push_back(model_spec(name, o, trace.isa));
  }
  if (specs.empty()) throw std::invalid_argument("no models given");
  const auto rows = compare(specs, trace, sim_config(o));
  emit(o.out, compare_csv(rows), out);
  if (!o.out.empty()) {
    ordered_json config;
    ordered_json models = ordered_json::array();
    for (const auto& s : specs) models.push_back(describe_model(s));
    config["models"] = models;
    config["sim"] = sim_config(o).to_json();
    config["csv_schema"] = kMetricsSchema;
    write_manifest("compare", std::move(config), {o.trace}, o.out);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Branch target buffer simulator (BTB-X, Conv, R-BTB, PDede)", "btblab"};
  app.set_version_flag("--version", BTBLAB_VERSION);
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Generate a seeded synthetic branch trace");
  gen_cmd->add_option("--branches", gen.branches, "Static branches")->capture_default_str();
  gen_cmd->add_option("--records", gen.records, "Dynamic records")->capture_default_str();
  gen_cmd->add_option("--dist", gen.dist, "Stored-width buckets, e.g. 0-6:0.54,7-10:0.22,11-25:0.23,26-46:0.01");
  gen_cmd->add_option("--kind-mix", gen.kind_mix, "Kind shares, e.g. cond:0.6,uncond:0.08,call:0.12,ret:0.12,ind:0.04,ind_call:0.04");
  gen_cmd->add_option("--pattern", gen.pattern, "round-robin | uniform | zipf")->capture_default_str();
  gen_cmd->add_option("--zipf-s", gen.zipf_s, "Zipf exponent")->capture_default_str();
  gen_cmd->add_option("--taken-rate", gen.taken_rate, "Taken probability of conditionals")->capture_default_str();
  gen_cmd->add_option("--gap-mean", gen.gap_mean, "Mean non-branch instructions before a record")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "PRNG seed")->capture_default_str();
  gen_cmd->add_option("--isa", gen.isa, "arm64 | x86")->capture_default_str();
  gen_cmd->add_option("-o,--output", gen.out, "Trace file (.jsonl for text)")->required();

  std::string analyze_trace, analyze_out;
  auto* analyze_cmd = app.add_subcommand("analyze-offsets", "Histogram of stored target-offset widths");
  analyze_cmd->add_option("trace", analyze_trace, "Trace file")->required();
  analyze_cmd->add_option("-o,--output", analyze_out, "CSV output (stdout if omitted)");

  std::vector<double> budgets;
  std::string cap_isa = "arm64", cap_out;
  auto* cap_cmd = app.add_subcommand("capacity-table", "Branch capacity of each organization per budget");
  cap_cmd->add_option("--budgets", budgets, "Budgets in KB (default: the seven presets)")->delimiter(',');
  cap_cmd->add_option("--isa", cap_isa, "arm64 | x86")->capture_default_str();
  cap_cmd->add_option("-o,--output", cap_out, "CSV output (stdout if omitted)");

  SimOptions sim;
  auto add_sizing = [&sim](CLI::App* cmd, bool with_sets) {
    auto* budget = cmd->add_option("--budget-kb", sim.budget_kb, "Storage budget in KB (a preset size)");
    if (with_sets) {
      auto* sets = cmd->add_option("--sets", sim.sets, "Explicit set count (btbx, conv)");
      budget->excludes(sets);
    }
    cmd->add_option("--warmup", sim.warmup, "Warmup records (default: 10% of the trace)");
    cmd->add_option("--measure", sim.measure, "Measured records (default: the rest)");
    cmd->add_option("trace", sim.trace, "Trace file")->required();
  };
  auto* sim_cmd = app.add_subcommand("simulate", "Run one model over a trace");
  sim_cmd->add_option("--model", sim.model, "conv | rbtb | pdede | btbx")->required();
  add_sizing(sim_cmd, true);
  sim_cmd->add_option("-o,--output", sim.out, "Metrics JSON (stdout if omitted)");

  auto* cmp_cmd = app.add_subcommand("compare", "Run several models at one budget over a trace");
  cmp_cmd->add_option("--models", sim.models, "Comma-separated models")->capture_default_str();
  add_sizing(cmp_cmd, false);
  cmp_cmd->add_option("-o,--output", sim.out, "CSV output (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_trace(gen);
    if (*analyze_cmd) return cmd_analyze(analyze_trace, analyze_out, out);
    if (*cap_cmd) return cmd_capacity(budgets, cap_isa, cap_out, out, err);
    if (*sim_cmd) {
      if (!sim.budget_kb && !sim.sets) throw std::invalid_argument("give --budget-kb or --sets");
      return cmd_simulate(sim, out);
    }
    if (*cmp_cmd) {
      if (!sim.budget_kb) throw std::invalid_argument("give --budget-kb");
      return cmd_compare(sim, out);
    }
  } catch (const TraceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace btblab
