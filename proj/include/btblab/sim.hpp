#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "btblab/models/factory.hpp"
#include "btblab/trace.hpp"

namespace btblab {

inline constexpr const char* kMetricsSchema = "btblab.metrics/1";

struct SimConfig {
  // Records replayed before counting starts; default is a tenth of the trace.
  std::optional<std::int64_t> warmup_records;
  // Records counted after warmup; default is the rest of the trace.
  std::optional<std::int64_t> measure_records;
  std::size_t ras_capacity = ReturnAddressStack::kDefaultCapacity;

  nlohmann::ordered_json to_json() const;
};

struct Metrics {
  std::string model;
  std::int64_t records = 0;
  std::int64_t warmup_records = 0;
  std::int64_t measured_records = 0;
  std::int64_t instructions = 0;
  std::int64_t taken_branches = 0;
  std::int64_t taken_btb_misses = 0;
  std::int64_t wrong_target_misses = 0;  // subset of taken_btb_misses
  double mpki = 0.0;
  std::vector<std::pair<std::string, std::int64_t>> hits_by_source;
  std::vector<std::pair<std::string, double>> occupancy_by_way;
  std::int64_t ras_underflows = 0;
  std::int64_t ras_mispredicts = 0;
  std::int64_t stale_lookups = 0;

  std::int64_t hits() const;
  double miss_rate() const;
  nlohmann::ordered_json to_json() const;

  bool operator==(const Metrics&) const = default;
};

// Replays trace through model (after resetting it). Throws
// std::invalid_argument when the trace ISA differs from the model's.
Metrics run(BtbModel& model, const TraceFile& trace, const SimConfig& config = {});

struct OffsetHistogram {
  std::vector<std::int64_t> counts;  // index = stored width
  std::int64_t total = 0;

  double fraction(std::size_t width) const;
  // Share of taken branches with stored width <= width; exactly 1.0 at the end.
  double cumulative(std::size_t width) const;
  std::string csv() const;
};

// Over taken records only; returns count as width 0.
OffsetHistogram offset_histogram(const TraceFile& trace);

// Worker count for compare(): hardware threads, capped by BTBLAB_THREADS.
unsigned worker_count(std::size_t jobs);

// One Metrics row per spec, in the order given.
std::vector<Metrics> compare(const std::vector<ModelSpec>& specs, const TraceFile& trace,
                             const SimConfig& config = {});
std::string compare_csv(const std::vector<Metrics>& rows);

}  // namespace btblab
