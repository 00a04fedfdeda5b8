#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "btblab/trace.hpp"

namespace btblab {

struct WidthBucket {
  int lo = 0;  // inclusive stored widths
  int hi = 0;
  double probability = 0.0;
};

enum class AccessPattern { round_robin, uniform, zipf };

std::string_view pattern_name(AccessPattern p);
AccessPattern parse_pattern(std::string_view name);  // accepts round-robin / round_robin

struct GeneratorSpec {
  std::int64_t static_branches = 3000;
  std::int64_t records = 100000;
  std::vector<WidthBucket> widths = default_widths();
  std::array<double, kNumBranchKinds> kind_mix = default_kind_mix();
  double taken_rate = 1.0;  // conditionals only
  double gap_mean = 4.0;
  AccessPattern pattern = AccessPattern::round_robin;
  double zipf_s = 1.0;
  std::uint64_t seed = 1;
  IsaProfile isa = IsaProfile::arm64();

  static std::vector<WidthBucket> default_widths();
  static std::array<double, kNumBranchKinds> default_kind_mix();

  // Throws std::invalid_argument describing the first problem.
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// "0-6:0.54,7-10:0.22,11-25:0.23,26-46:0.01"; a single width may omit the range.
std::vector<WidthBucket> parse_width_buckets(std::string_view text);
// "cond:0.6,call:0.1,..."; kinds not named get probability 0.
std::array<double, kNumBranchKinds> parse_kind_mix(std::string_view text);

std::string format_width_buckets(const std::vector<WidthBucket>& buckets);

// Static branch table drawn from the spec, before the dynamic stream.
struct StaticBranch {
  Addr pc = 0;
  BranchKind kind = BranchKind::conditional;
  int stored_width = 0;
  std::vector<Addr> targets;  // empty for returns
};

std::vector<StaticBranch> generate_static(const GeneratorSpec& spec);
TraceFile generate(const GeneratorSpec& spec);

}  // namespace btblab
