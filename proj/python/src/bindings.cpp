#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "btblab/generator.hpp"
#include "btblab/sim.hpp"
#include "btblab/storage.hpp"

namespace py = pybind11;
using namespace btblab;

namespace {

SimConfig sim_config(std::optional<std::int64_t> warmup, std::optional<std::int64_t> measure) {
  SimConfig c;
  c.warmup_records = warmup;
  c.measure_records = measure;
  return c;
}

ModelSpec model_spec(const std::string& name, std::optional<double> budget_kb, std::optional<std::int64_t> sets,
                     const IsaProfile& isa) {
  const auto kind = parse_model_kind(name);
  if (!kind) throw std::invalid_argument("unknown model '" + name + "'");
  ModelSpec s;
  s.kind = *kind;
  s.budget_kb = budget_kb;
  s.sets = sets;
  s.isa = isa;
  return s;
}

py::dict row_dict(const CapacityRow& r) {
  py::dict d;
  d["budget_bits"] = r.budget_bits;
  d["budget_kb"] = r.budget_kb;
  d["btbx"] = r.btbx;
  d["pdede"] = r.pdede;
  d["conv"] = r.conv;
  d["ratio_conv"] = r.ratio_conv;
  d["ratio_pdede"] = r.ratio_pdede;
  d["extrapolated"] = r.extrapolated;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

// Structured results cross as JSON text; the package wrapper decodes them.
PYBIND11_MODULE(_core, m) {
  py::register_exception<TraceError>(m, "TraceError", PyExc_ValueError);

  m.def(
      "required_offset_width",
      [](Addr pc, Addr target, const std::string& isa) { return required_offset_width(pc, target, parse_isa(isa)); },
      py::arg("pc"), py::arg("target"), py::arg("isa") = "arm64");
  m.def(
      "encode_offset",
      [](Addr pc, Addr target, const std::string& isa) {
        const auto e = encode_offset(pc, target, parse_isa(isa));
        return py::make_tuple(e.stored_width, e.bits);
      },
      py::arg("pc"), py::arg("target"), py::arg("isa") = "arm64");
  m.def(
      "decode_target",
      [](Addr pc, int width, std::uint64_t bits, const std::string& isa) {
        return decode_target(pc, OffsetEncoding{width, bits}, parse_isa(isa));
      },
      py::arg("pc"), py::arg("stored_width"), py::arg("bits"), py::arg("isa") = "arm64");

  m.def(
      "capacity_table",
      [](std::optional<std::vector<double>> budgets_kb, const std::string& isa) {
        std::vector<std::int64_t> bits;
        if (!budgets_kb) {
          for (const auto& p : budget_presets()) bits.push_back(p.budget_bits);
        } else {
          for (double kb : *budgets_kb) {
            if (!(kb > 0)) throw std::invalid_argument("budgets must be positive");
            const auto preset = resolve_budget_kb(kb);
            bits.push_back(preset ? preset->budget_bits : kb_to_bits(kb));
          }
        }
        py::list rows;
        for (const auto& r : capacity_table(bits, parse_isa(isa))) rows.append(row_dict(r));
        return rows;
      },
      py::arg("budgets_kb") = py::none(), py::arg("isa") = "arm64");
  m.def("btbx_total_bits", [](std::int64_t sets, const std::string& isa) {
    return btbx_total_bits(isa == "x86" ? BtbxGeometry::x86(sets) : BtbxGeometry::arm64(sets));
  }, py::arg("sets"), py::arg("isa") = "arm64");

  m.def(
      "gen_trace",
      [](const std::string& path, std::int64_t branches, std::int64_t records, const std::string& dist,
         const std::string& kind_mix, const std::string& pattern, double zipf_s, double taken_rate, double gap_mean,
         std::uint64_t seed, const std::string& isa) {
        GeneratorSpec spec;
        spec.static_branches = branches;
        spec.records = records;
        if (!dist.empty()) spec.widths = parse_width_buckets(dist);
        if (!kind_mix.empty()) spec.kind_mix = parse_kind_mix(kind_mix);
        spec.pattern = parse_pattern(pattern);
        spec.zipf_s = zipf_s;
        spec.taken_rate = taken_rate;
        spec.gap_mean = gap_mean;
        spec.seed = seed;
        spec.isa = parse_isa(isa);
        spec.validate();
        py::gil_scoped_release release;
        const auto trace = generate(spec);
        write_trace(std::filesystem::path(path), trace);
        return static_cast<std::int64_t>(trace.records.size());
      },
      py::arg("path"), py::arg("branches") = 3000, py::arg("records") = 100000, py::arg("dist") = "",
      py::arg("kind_mix") = "", py::arg("pattern") = "round-robin", py::arg("zipf_s") = 1.0,
      py::arg("taken_rate") = 1.0, py::arg("gap_mean") = 4.0, py::arg("seed") = 1, py::arg("isa") = "arm64");

  m.def(
      "offset_histogram",
      [](const std::string& path) {
        const auto h = offset_histogram(read_trace(std::filesystem::path(path)));
        return h.counts;
      },
      py::arg("path"));

  m.def(
      "simulate_json",
      [](const std::string& path, const std::string& model, std::optional<double> budget_kb,
         std::optional<std::int64_t> sets, std::optional<std::int64_t> warmup, std::optional<std::int64_t> measure) {
        py::gil_scoped_release release;
        const auto trace = read_trace(std::filesystem::path(path));
        auto btb = make_model(model_spec(model, budget_kb, sets, trace.isa));
        return run(*btb, trace, sim_config(warmup, measure)).to_json().dump();
      },
      py::arg("path"), py::arg("model"), py::arg("budget_kb") = py::none(), py::arg("sets") = py::none(),
      py::arg("warmup") = py::none(), py::arg("measure") = py::none());

  m.def(
      "compare_json",
      [](const std::string& path, const std::vector<std::string>& models, double budget_kb,
         std::optional<std::int64_t> warmup, std::optional<std::int64_t> measure) {
        py::gil_scoped_release release;
        const auto trace = read_trace(std::filesystem::path(path));
        std::vector<ModelSpec> specs;
        for (const auto& name : models) specs.push_back(model_spec(name, budget_kb, std::nullopt, trace.isa));
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& m : compare(specs, trace, sim_config(warmup, measure))) rows.push_back(m.to_json());
        return rows.dump();
      },
      py::arg("path"), py::arg("models"), py::arg("budget_kb"), py::arg("warmup") = py::none(),
      py::arg("measure") = py::none());
}
