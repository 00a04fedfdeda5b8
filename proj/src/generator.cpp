#include "btblab/generator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

#include <fmt/core.h>

namespace btblab {

namespace {

// Instructions between consecutive static branches. Odd multiples of the
// instruction size spread branches evenly over any power-of-two set count.
constexpr Addr kCodeBase = 0x400000;
constexpr Addr kAlignedStride = 20;
constexpr Addr kByteStride = 17;
constexpr std::size_t kCallStackLimit = 4096;

// mt19937_64's output sequence is fixed by the standard; the std
// distributions are not, so the mappings below are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument(fmt::format("bad {} '{}'", what, s));
  }
  return value;
}

Addr stride_for(const IsaProfile& isa) { return isa.aligned() ? kAlignedStride : kByteStride; }

// Share of static branches whose drawn width is exactly zero.
double zero_width_mass(const std::vector<WidthBucket>& buckets) {
  double mass = 0.0;
  for (const auto& b : buckets) {
    if (b.lo == 0) mass += b.probability / (b.hi - b.lo + 1);
  }
  return mass;
}

int draw_width(Rng& rng, const std::vector<WidthBucket>& buckets) {
  const double u = rng.uniform();
  double acc = 0.0;
  const WidthBucket* chosen = &buckets.back();
  for (const auto& b : buckets) {
    acc += b.probability;
    if (u < acc) {
      chosen = &b;
      break;
    }
  }
  return chosen->lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(chosen->hi - chosen->lo + 1)));
}

BranchKind draw_non_return_kind(Rng& rng, const std::array<double, kNumBranchKinds>& mix) {
  double total = 0.0;
  for (int k = 0; k < kNumBranchKinds; ++k) {
    if (static_cast<BranchKind>(k) != BranchKind::ret) total += mix[k];
  }
  double u = rng.uniform() * total;
  BranchKind last = BranchKind::conditional;
  for (int k = 0; k < kNumBranchKinds; ++k) {
    const auto kind = static_cast<BranchKind>(k);
    if (kind == BranchKind::ret || mix[k] <= 0.0) continue;
    last = kind;
    if (u < mix[k]) return kind;
    u -= mix[k];
  }
  return last;
}

// A target whose highest bit differing from pc sits exactly at stored width w.
Addr target_at_width(Rng& rng, Addr pc, int width, const IsaProfile& isa) {
  if (width == 0) return pc;
  const int n = width + isa.align_shift;
  const Addr flip = Addr{1} << (n - 1);
  const Addr low = rng.next() & low_mask(n - 1) & ~low_mask(isa.align_shift);
  return (pc & ~low_mask(n)) | ((pc & flip) ^ flip) | low;
}

std::uint16_t draw_gap(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double p = 1.0 / (1.0 + mean);
  const double g = std::floor(std::log1p(-rng.uniform()) / std::log1p(-p));
  return static_cast<std::uint16_t>(std::min(g, 65535.0));
}

}  // namespace

std::string_view pattern_name(AccessPattern p) {
  switch (p) {
    case AccessPattern::round_robin: return "round-robin";
    case AccessPattern::uniform: return "uniform";
    case AccessPattern::zipf: return "zipf";
  }
  return "?";
}

AccessPattern parse_pattern(std::string_view name) {
  if (name == "round-robin" || name == "round_robin") return AccessPattern::round_robin;
  if (name == "uniform") return AccessPattern::uniform;
  if (name == "zipf") return AccessPattern::zipf;
  throw std::invalid_argument(fmt::format("unknown access pattern '{}'", name));
}

std::vector<WidthBucket> GeneratorSpec::default_widths() {
  return {{0, 6, 0.54}, {7, 10, 0.22}, {11, 25, 0.23}, {26, 46, 0.01}};
}

std::array<double, kNumBranchKinds> GeneratorSpec::default_kind_mix() {
  // cond, uncond, call, ret, ind, ind_call
  return {0.60, 0.08, 0.12, 0.12, 0.04, 0.04};
}

void GeneratorSpec::validate() const {
  isa.validate();
  if (static_branches <= 0) throw std::invalid_argument("static branch count must be positive");
  if (records <= 0) throw std::invalid_argument("record count must be positive");
  const Addr span = static_cast<Addr>(static_branches) * stride_for(isa);
  if (kCodeBase + span >= (Addr{1} << (isa.va_bits - 1))) {
    throw std::invalid_argument("too many static branches for the address space");
  }
  if (widths.empty()) throw std::invalid_argument("width distribution is empty");
  double width_sum = 0.0;
  std::vector<bool> covered(static_cast<std::size_t>(isa.max_stored_target_bits() + 1), false);
  for (const auto& b : widths) {
    if (b.lo < 0 || b.hi < b.lo) throw std::invalid_argument(fmt::format("bad width range {}-{}", b.lo, b.hi));
    if (b.hi > isa.max_stored_target_bits()) {
      throw std::invalid_argument(fmt::format("width {} exceeds the {} stored target bits of {}", b.hi,
                                              isa.max_stored_target_bits(), isa_name(isa)));
    }
    if (b.probability < 0.0) throw std::invalid_argument("negative width probability");
    for (int w = b.lo; w <= b.hi; ++w) {
      if (covered[static_cast<std::size_t>(w)]) throw std::invalid_argument(fmt::format("width {} listed twice", w));
      covered[static_cast<std::size_t>(w)] = true;
    }
    width_sum += b.probability;
  }
  if (std::abs(width_sum - 1.0) > 1e-9) {
    throw std::invalid_argument(fmt::format("width probabilities sum to {}, not 1", width_sum));
  }
  double kind_sum = 0.0;
  for (double p : kind_mix) {
    if (p < 0.0) throw std::invalid_argument("negative kind probability");
    kind_sum += p;
  }
  if (std::abs(kind_sum - 1.0) > 1e-9) {
    throw std::invalid_argument(fmt::format("kind probabilities sum to {}, not 1", kind_sum));
  }
  if (!(taken_rate >= 0.0 && taken_rate <= 1.0)) throw std::invalid_argument("taken rate must lie in [0, 1]");
  if (!(gap_mean >= 0.0 && gap_mean <= 65535.0)) throw std::invalid_argument("gap mean must lie in [0, 65535]");
  if (pattern == AccessPattern::zipf && !(zipf_s > 0.0)) throw std::invalid_argument("zipf exponent must be positive");
}

nlohmann::ordered_json GeneratorSpec::to_json() const {
  nlohmann::ordered_json j;
  j["static_branches"] = static_branches;
  j["records"] = records;
  j["dist"] = format_width_buckets(widths);
  nlohmann::ordered_json mix;
  for (int k = 0; k < kNumBranchKinds; ++k) mix[std::string(kind_name(static_cast<BranchKind>(k)))] = kind_mix[k];
  j["kind_mix"] = mix;
  j["taken_rate"] = taken_rate;
  j["gap_mean"] = gap_mean;
  j["pattern"] = pattern_name(pattern);
  if (pattern == AccessPattern::zipf) j["zipf_s"] = zipf_s;
  j["seed"] = seed;
  j["isa"] = isa_name(isa);
  return j;
}

std::vector<WidthBucket> parse_width_buckets(std::string_view text) {
  std::vector<WidthBucket> out;
  for (const auto item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument(fmt::format("bucket '{}' lacks ':p'", item));
    const auto range = trim(item.substr(0, colon));
    WidthBucket b;
    if (const auto dash = range.find('-'); dash != std::string_view::npos) {
      b.lo = parse_number<int>(trim(range.substr(0, dash)), "width");
      b.hi = parse_number<int>(trim(range.substr(dash + 1)), "width");
    } else {
      b.lo = b.hi = parse_number<int>(range, "width");
    }
    b.probability = parse_number<double>(trim(item.substr(colon + 1)), "probability");
    out.push_back(b);
  }
  return out;
}

std::array<double, kNumBranchKinds> parse_kind_mix(std::string_view text) {
  std::array<double, kNumBranchKinds> mix{};
  for (const auto item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument(fmt::format("kind '{}' lacks ':p'", item));
    const auto kind = parse_kind(trim(item.substr(0, colon)));
    if (!kind) throw std::invalid_argument(fmt::format("unknown branch kind in '{}'", item));
    mix[static_cast<std::size_t>(*kind)] = parse_number<double>(trim(item.substr(colon + 1)), "probability");
  }
  return mix;
}

std::string format_width_buckets(const std::vector<WidthBucket>& buckets) {
  std::string out;
  for (const auto& b : buckets) {
    if (!out.empty()) out += ',';
    out += b.lo == b.hi ? fmt::format("{}:{}", b.lo, b.probability)
                        : fmt::format("{}-{}:{}", b.lo, b.hi, b.probability);
  }
  return out;
}

std::vector<StaticBranch> generate_static(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const IsaProfile& isa = spec.isa;
  const double p_ret = spec.kind_mix[static_cast<std::size_t>(BranchKind::ret)];
  const double zero_mass = zero_width_mass(spec.widths);
  // Returns need no offset bits, so they are carved out of the zero-width share.
  const double ret_given_zero = zero_mass > 0.0 ? std::min(1.0, p_ret / zero_mass) : 0.0;
  const bool only_returns = p_ret >= 1.0;

  std::vector<StaticBranch> out(static_cast<std::size_t>(spec.static_branches));
  for (std::size_t i = 0; i < out.size(); ++i) {
    StaticBranch& s = out[i];
    s.pc = kCodeBase + static_cast<Addr>(i) * stride_for(isa);
    s.stored_width = draw_width(rng, spec.widths);
    if (only_returns || (s.stored_width == 0 && rng.chance(ret_given_zero))) {
      s.kind = BranchKind::ret;
      s.stored_width = 0;
      continue;
    }
    s.kind = draw_non_return_kind(rng, spec.kind_mix);
    const int n_targets = s.kind == BranchKind::indirect || s.kind == BranchKind::indirect_call ? 2 : 1;
    for (int t = 0; t < n_targets; ++t) s.targets.push_back(target_at_width(rng, s.pc, s.stored_width, isa));
  }
  return out;
}

TraceFile generate(const GeneratorSpec& spec) {
  const auto statics = generate_static(spec);
  Rng rng(spec.seed ^ 0x5eed5eed5eed5eedULL);
  const auto n = static_cast<std::uint64_t>(statics.size());
  const bool has_calls = std::any_of(statics.begin(), statics.end(), [](const StaticBranch& s) { return is_call(s.kind); });

  std::vector<std::uint32_t> rank_to_branch;
  std::vector<double> zipf_cdf;
  if (spec.pattern == AccessPattern::zipf) {
    rank_to_branch.resize(n);
    std::iota(rank_to_branch.begin(), rank_to_branch.end(), 0u);
    for (std::uint64_t i = n - 1; i > 0; --i) std::swap(rank_to_branch[i], rank_to_branch[rng.below(i + 1)]);
    zipf_cdf.resize(n);
    double acc = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
      acc += 1.0 / std::pow(static_cast<double>(k + 1), spec.zipf_s);
      zipf_cdf[k] = acc;
    }
  }

  auto next_index = [&, cursor = std::uint64_t{0}]() mutable -> std::uint64_t {
    switch (spec.pattern) {
      case AccessPattern::round_robin: return cursor++ % n;
      case AccessPattern::uniform: return rng.below(n);
      case AccessPattern::zipf: {
        const double u = rng.uniform() * zipf_cdf.back();
        const auto it = std::upper_bound(zipf_cdf.begin(), zipf_cdf.end(), u);
        const auto rank = std::min<std::uint64_t>(static_cast<std::uint64_t>(it - zipf_cdf.begin()), n - 1);
        return rank_to_branch[rank];
      }
    }
    return 0;
  };

  TraceFile trace;
  trace.isa = spec.isa;
  trace.records.reserve(static_cast<std::size_t>(spec.records));
  std::deque<Addr> calls;
  while (static_cast<std::int64_t>(trace.records.size()) < spec.records) {
    const StaticBranch& s = statics[next_index()];
    BranchRecord r;
    r.pc = s.pc;
    r.kind = s.kind;
    if (s.kind == BranchKind::ret) {
      if (calls.empty()) {
        // Keep returns behind their calls whenever calls exist at all.
        if (has_calls) continue;
        r.target = s.pc;
      } else {
        r.target = calls.back();
        calls.pop_back();
      }
    } else {
      r.target = s.targets.size() == 1 ? s.targets[0] : s.targets[rng.below(s.targets.size())];
    }
    r.taken = s.kind == BranchKind::conditional ? rng.chance(spec.taken_rate) : true;
    r.gap = draw_gap(rng, spec.gap_mean);
    if (is_call(s.kind)) {
      calls.push_back(s.pc + spec.isa.call_size());
      if (calls.size() > kCallStackLimit) calls.pop_front();
    }
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace btblab
