#include "btblab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <thread>

#include <fmt/core.h>

namespace btblab {

nlohmann::ordered_json SimConfig::to_json() const {
  nlohmann::ordered_json j;
  j["warmup_records"] = warmup_records ? nlohmann::ordered_json(*warmup_records) : nlohmann::ordered_json("10%");
  j["measure_records"] = measure_records ? nlohmann::ordered_json(*measure_records) : nlohmann::ordered_json("rest");
  j["ras_capacity"] = ras_capacity;
  return j;
}

std::int64_t Metrics::hits() const {
  std::int64_t sum = 0;
  for (const auto& [label, count] : hits_by_source) sum += count;
  return sum;
}

double Metrics::miss_rate() const {
  return taken_branches == 0 ? 0.0 : static_cast<double>(taken_btb_misses) / static_cast<double>(taken_branches);
}

nlohmann::ordered_json Metrics::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = kMetricsSchema;
  j["model"] = model;
  j["instructions"] = instructions;
  j["taken_branches"] = taken_branches;
  j["taken_btb_misses"] = taken_btb_misses;
  j["mpki"] = mpki;
  nlohmann::ordered_json hits_json = nlohmann::ordered_json::object();
  for (const auto& [label, count] : hits_by_source) hits_json[label] = count;
  j["hits_by_source"] = hits_json;
  nlohmann::ordered_json occ = nlohmann::ordered_json::object();
  for (const auto& [label, frac] : occupancy_by_way) occ[label] = frac;
  j["occupancy_by_way"] = occ;
  j["wrong_target_misses"] = wrong_target_misses;
  j["miss_rate"] = miss_rate();
  j["records"] = records;
  j["warmup_records"] = warmup_records;
  j["measured_records"] = measured_records;
  j["ras_underflows"] = ras_underflows;
  j["ras_mispredicts"] = ras_mispredicts;
  j["stale_lookups"] = stale_lookups;
  return j;
}

Metrics run(BtbModel& model, const TraceFile& trace, const SimConfig& config) {
  if (!(trace.isa == model.isa())) {
    throw std::invalid_argument(fmt::format("trace is {} but the model is configured for {}", isa_name(trace.isa),
                                            isa_name(model.isa())));
  }
  const auto n = static_cast<std::int64_t>(trace.records.size());
  const std::int64_t warmup = std::clamp<std::int64_t>(config.warmup_records.value_or(n / 10), 0, n);
  if (config.warmup_records && *config.warmup_records < 0) throw std::invalid_argument("warmup must be >= 0");
  std::int64_t end = n;
  if (config.measure_records) {
    if (*config.measure_records < 0) throw std::invalid_argument("measured record count must be >= 0");
    end = std::min(n, warmup + *config.measure_records);
  }

  model.reset();
  ReturnAddressStack ras(config.ras_capacity);
  const auto& labels = model.source_labels();
  std::vector<std::int64_t> hits(labels.size(), 0);
  std::vector<std::int64_t> occupied(labels.size(), 0);
  std::uint64_t stale_at_warmup = 0;

  Metrics m;
  m.model = model.name();
  m.records = n;
  m.warmup_records = warmup;

  for (std::int64_t i = 0; i < end; ++i) {
    const BranchRecord& r = trace.records[static_cast<std::size_t>(i)];
    const bool measured = i >= warmup;
    if (i == warmup) stale_at_warmup = model.stale_lookups();

    const auto prediction = model.lookup(r.pc);
    if (measured) {
      m.instructions += std::int64_t{r.gap} + 1;
      const auto counts = model.valid_counts();
      for (std::size_t s = 0; s < counts.size(); ++s) occupied[s] += counts[s];
    }
    if (!r.taken) continue;

    if (measured) {
      ++m.taken_branches;
      bool hit = false;
      if (prediction) {
        hit = r.kind == BranchKind::ret || (prediction->target && *prediction->target == r.target);
        if (!hit) ++m.wrong_target_misses;
      }
      if (hit) {
        ++hits[static_cast<std::size_t>(prediction->source)];
      } else {
        ++m.taken_btb_misses;
      }
    }
    model.commit_update(r);

    if (is_call(r.kind)) {
      ras.push(r.pc + trace.isa.call_size());
    } else if (r.kind == BranchKind::ret) {
      const auto before = ras.underflows();
      const auto popped = ras.pop();
      if (measured) {
        m.ras_underflows += static_cast<std::int64_t>(ras.underflows() - before);
        if (popped && *popped != r.target) ++m.ras_mispredicts;
      }
    }
  }
  if (end <= warmup) stale_at_warmup = model.stale_lookups();

  m.measured_records = std::max<std::int64_t>(end - warmup, 0);
  m.stale_lookups = static_cast<std::int64_t>(model.stale_lookups() - stale_at_warmup);
  m.mpki = m.instructions == 0 ? 0.0 : static_cast<double>(m.taken_btb_misses) * 1000.0 / static_cast<double>(m.instructions);
  const auto caps = model.source_capacities();
  for (std::size_t s = 0; s < labels.size(); ++s) {
    m.hits_by_source.emplace_back(labels[s], hits[s]);
    const double denom = static_cast<double>(caps[s]) * static_cast<double>(m.measured_records);
    m.occupancy_by_way.emplace_back(labels[s], denom > 0 ? static_cast<double>(occupied[s]) / denom : 0.0);
  }
  return m;
}

double OffsetHistogram::fraction(std::size_t width) const {
  return total == 0 ? 0.0 : static_cast<double>(counts.at(width)) / static_cast<double>(total);
}

double OffsetHistogram::cumulative(std::size_t width) const {
  if (total == 0) return 0.0;
  std::int64_t running = 0;
  for (std::size_t w = 0; w <= width && w < counts.size(); ++w) running += counts[w];
  return static_cast<double>(running) / static_cast<double>(total);
}

std::string OffsetHistogram::csv() const {
  std::string out = "stored_width,count,fraction,cumulative\n";
  std::int64_t running = 0;
  for (std::size_t w = 0; w < counts.size(); ++w) {
    running += counts[w];
    const double frac = total == 0 ? 0.0 : static_cast<double>(counts[w]) / static_cast<double>(total);
    const double cum = total == 0 ? 0.0 : static_cast<double>(running) / static_cast<double>(total);
    out += fmt::format("{},{},{:.6f},{:.6f}\n", w, counts[w], frac, cum);
  }
  return out;
}

OffsetHistogram offset_histogram(const TraceFile& trace) {
  OffsetHistogram h;
  h.counts.assign(static_cast<std::size_t>(trace.isa.max_stored_target_bits() + 1), 0);
  for (const auto& r : trace.records) {
    if (!r.taken) continue;
    ++h.counts[static_cast<std::size_t>(stored_width_for(r, trace.isa))];
    ++h.total;
  }
  return h;
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BTBLAB_THREADS")) {
    unsigned cap = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (ec == std::errc{} && ptr == s.data() + s.size() && cap > 0) n = std::min(n, cap);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

std::vector<Metrics> compare(const std::vector<ModelSpec>& specs, const TraceFile& trace, const SimConfig& config) {
  // Build every model first so configuration errors surface before any work.
  std::vector<std::unique_ptr<BtbModel>> models;
  for (const auto& spec : specs) models.push_back(make_model(spec));

  std::vector<Metrics> rows(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        rows[i] = run(*models[i], trace, config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = worker_count(specs.size());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string compare_csv(const std::vector<Metrics>& rows) {
  std::string out =
      "model,instructions,taken_branches,taken_btb_misses,wrong_target_misses,miss_rate,mpki,ras_underflows,"
      "ras_mispredicts\n";
  for (const auto& m : rows) {
    out += fmt::format("{},{},{},{},{},{:.6f},{:.6f},{},{}\n", m.model, m.instructions, m.taken_branches,
                       m.taken_btb_misses, m.wrong_target_misses, m.miss_rate(), m.mpki, m.ras_underflows,
                       m.ras_mispredicts);
  }
  return out;
}

}  // namespace btblab
