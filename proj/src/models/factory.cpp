#include "btblab/models/factory.hpp"

#include <fmt/core.h>

#include "btblab/models/btbx.hpp"
#include "btblab/models/conv.hpp"
#include "btblab/models/pdede.hpp"
#include "btblab/models/rbtb.hpp"
#include "btblab/storage.hpp"

namespace btblab {

std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::conv: return "conv";
    case ModelKind::rbtb: return "rbtb";
    case ModelKind::pdede: return "pdede";
    case ModelKind::btbx: return "btbx";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::conv, ModelKind::rbtb, ModelKind::pdede, ModelKind::btbx}) {
    if (model_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

struct Resolved {
  std::optional<BudgetPreset> budget;
  std::int64_t btbx_sets = 0;
  std::int64_t conv_entries = 0;
  int conv_assoc = 8;
  PdedeConfig pdede;
  RbtbLayout rbtb;
};

int conv_assoc_for(std::int64_t entries) {
  for (int assoc : {8, 4, 2}) {
    if (entries % assoc == 0) return assoc;
  }
  return 1;
}

Resolved resolve(const ModelSpec& spec) {
  spec.isa.validate();
  if (spec.budget_kb.has_value() == spec.sets.has_value()) {
    throw std::invalid_argument("give exactly one of a budget or a set count");
  }
  Resolved r;
  if (spec.sets) {
    if (*spec.sets <= 0) throw std::invalid_argument("set count must be positive");
    switch (spec.kind) {
      case ModelKind::btbx: r.btbx_sets = *spec.sets; break;
      case ModelKind::conv:
        r.conv_entries = *spec.sets * 8;
        r.conv_assoc = 8;
        break;
      default:
        throw std::invalid_argument(
            fmt::format("{} is sized from a storage budget, not a set count", model_kind_name(spec.kind)));
    }
    return r;
  }

  r.budget = resolve_budget_kb(*spec.budget_kb);
  if (!r.budget) {
    throw std::invalid_argument(fmt::format(
        "budget {} KB does not match a preset (0.9, 1.8, 3.6, 7.25, 14.5, 29, 58 KB)", *spec.budget_kb));
  }
  const std::int64_t bits = r.budget->budget_bits;
  switch (spec.kind) {
    case ModelKind::btbx: r.btbx_sets = r.budget->sets; break;
    case ModelKind::conv:
      r.conv_entries = conv_capacity(bits, ConvGeometry::for_isa(spec.isa));
      r.conv_assoc = conv_assoc_for(r.conv_entries);
      break;
    case ModelKind::pdede: {
      const auto preset = pdede_preset_for(bits);
      if (!preset) throw std::invalid_argument("no PDede preset for this budget");
      r.pdede.main_sets = preset->main_entries / r.pdede.main_assoc;
      r.pdede.page_entries = preset->page_entries;
      r.pdede.region_entries = preset->region_entries;
      break;
    }
    case ModelKind::rbtb: {
      const auto preset = pdede_preset_for(bits);
      if (!preset) throw std::invalid_argument("no Page-BTB sizing for this budget");
      r.rbtb = rbtb_layout(bits, preset->page_entries, spec.isa);
      break;
    }
  }
  return r;
}

}  // namespace

nlohmann::ordered_json describe_model(const ModelSpec& spec) {
  const Resolved r = resolve(spec);
  nlohmann::ordered_json j;
  j["model"] = model_kind_name(spec.kind);
  j["isa"] = isa_name(spec.isa);
  if (r.budget) {
    j["budget_kb"] = r.budget->budget_kb();
    j["budget_bits"] = r.budget->budget_bits;
  }
  switch (spec.kind) {
    case ModelKind::btbx: {
      const auto g = BtbxGeometry::for_isa(spec.isa, r.btbx_sets);
      j["sets"] = g.sets;
      j["way_widths"] = g.way_widths;
      j["xc_entries"] = g.xc_entries;
      j["total_bits"] = btbx_total_bits(g);
      j["capacity"] = g.branch_capacity();
      break;
    }
    case ModelKind::conv:
      j["entries"] = r.conv_entries;
      j["assoc"] = r.conv_assoc;
      j["entry_bits"] = ConvGeometry::for_isa(spec.isa).entry_bits();
      j["capacity"] = r.conv_entries;
      break;
    case ModelKind::pdede:
      j["main_sets"] = r.pdede.main_sets;
      j["main_assoc"] = r.pdede.main_assoc;
      j["page_entries"] = r.pdede.page_entries;
      j["page_assoc"] = r.pdede.page_assoc;
      j["region_entries"] = r.pdede.region_entries;
      j["capacity"] = r.pdede.main_sets * r.pdede.main_assoc;
      break;
    case ModelKind::rbtb:
      j["main_entries"] = r.rbtb.main_entries;
      j["main_assoc"] = r.rbtb.main_assoc;
      j["page_entries"] = r.rbtb.page_entries;
      j["main_entry_bits"] = r.rbtb.main_entry_bits;
      j["page_entry_bits"] = r.rbtb.page_entry_bits;
      j["capacity"] = r.rbtb.main_entries;
      break;
  }
  return j;
}

std::unique_ptr<BtbModel> make_model(const ModelSpec& spec) {
  const Resolved r = resolve(spec);
  switch (spec.kind) {
    case ModelKind::btbx: return std::make_unique<BtbX>(BtbxGeometry::for_isa(spec.isa, r.btbx_sets));
    case ModelKind::conv: return std::make_unique<ConvBtb>(r.conv_entries, r.conv_assoc, spec.isa);
    case ModelKind::pdede: return std::make_unique<PdedeBtb>(r.pdede, spec.isa);
    case ModelKind::rbtb:
      return std::make_unique<RBtb>(r.rbtb.main_entries, r.rbtb.main_assoc, r.rbtb.page_entries, spec.isa);
  }
  throw std::invalid_argument("unknown model");
}

}  // namespace btblab
