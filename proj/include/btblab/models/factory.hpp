#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "btblab/models/model.hpp"

namespace btblab {

enum class ModelKind { conv, rbtb, pdede, btbx };

std::string_view model_kind_name(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view name);

// How to size a model: a storage budget matched to one of the preset BTB-X
// sizes, or an explicit set count (btbx and conv only).
struct ModelSpec {
  ModelKind kind = ModelKind::btbx;
  std::optional<double> budget_kb;
  std::optional<std::int64_t> sets;
  IsaProfile isa{};
};

// Resolved structural parameters, for manifests and reports.
nlohmann::ordered_json describe_model(const ModelSpec& spec);

// Throws std::invalid_argument for an unknown or unresolvable configuration.
std::unique_ptr<BtbModel> make_model(const ModelSpec& spec);

}  // namespace btblab
