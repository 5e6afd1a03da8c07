#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "wban/config.hpp"
#include "wban/engine.hpp"
#include "wban/metrics.hpp"

namespace wban {

struct RunRow {
  StrategyKind strategy = StrategyKind::PPVG;
  PostureId posture{1};
  double rate_pps = 0.0;
  std::uint64_t seed = 0;
  MetricsReport report;
};

struct CellSummary {
  StrategyKind strategy = StrategyKind::PPVG;
  PostureId posture{1};
  double rate_pps = 0.0;
  std::size_t runs = 0;
  double mean_reception_rate = 0.0;
  double mean_inversions = 0.0;
  double mean_total_order_rate = 0.0;
  double mean_transmissions = 0.0;
  double mean_delay_s = 0.0;
};

struct SweepResult {
  std::vector<RunRow> rows;
  std::vector<CellSummary> summary;
};

inline ScenarioConfig cell_config(const SweepSpec& spec, StrategyKind strategy, PostureId posture,
                                  double rate, std::uint64_t seed) {
  ScenarioConfig cfg = spec.base;
  cfg.strategy.kind = strategy;
  cfg.posture = posture;
  cfg.rate_pps = rate;
  cfg.seed = seed;
  return cfg;
}

inline std::string cell_name(StrategyKind strategy, PostureId posture, double rate) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s/posture %d/%g pps", std::string(to_string(strategy)).c_str(),
                posture.value(), rate);
  return buf;
}

// Rounds the way the per-run CSV prints, so means recomputed from the CSV
// match the summary.
inline double as_printed(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return std::strtod(buf, nullptr);
}

// Rows are grouped by cell: within a cell, consecutive seeds.
inline std::vector<CellSummary> summarize(const std::vector<RunRow>& rows) {
  std::vector<CellSummary> out;
  for (const auto& row : rows) {
    if (out.empty() || out.back().strategy != row.strategy || out.back().posture != row.posture ||
        out.back().rate_pps != row.rate_pps) {
      out.push_back({row.strategy, row.posture, row.rate_pps});
    }
    auto& c = out.back();
    ++c.runs;
    c.mean_reception_rate += as_printed(row.report.reception_rate);
    c.mean_inversions += static_cast<double>(row.report.inversions);
    c.mean_total_order_rate += as_printed(row.report.total_order_rate);
    c.mean_transmissions += static_cast<double>(row.report.transmissions);
    c.mean_delay_s += as_printed(row.report.mean_delay_s);
  }
  for (auto& c : out) {
    auto n = static_cast<double>(c.runs);
    c.mean_reception_rate /= n;
    c.mean_inversions /= n;
    c.mean_total_order_rate /= n;
    c.mean_transmissions /= n;
    c.mean_delay_s /= n;
  }
  return out;
}

// Cells are validated up front; a bad cell aborts before anything runs.
// Workers pull cells from a shared counter and write into fixed slots, so
// the output order does not depend on scheduling.
inline SweepResult run_sweep(const SweepSpec& spec, unsigned jobs = 0) {
  struct Cell {
    StrategyKind strategy;
    PostureId posture;
    double rate;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  cells.reserve(spec.cell_count());
  for (auto strategy : spec.strategies) {
    for (auto posture : spec.postures) {
      for (double rate : spec.rates) {
        for (auto seed : spec.seeds) cells.push_back({strategy, posture, rate, seed});
      }
    }
  }
  for (std::size_t i = 0; i < cells.size(); i += spec.seeds.size()) {
    const auto& c = cells[i];
    try {
      Simulator probe(cell_config(spec, c.strategy, c.posture, c.rate, c.seed));
    } catch (const ConfigError& e) {
      throw ConfigError("cell " + cell_name(c.strategy, c.posture, c.rate) + ": " + e.what());
    }
  }

  SweepResult result;
  result.rows.resize(cells.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(cells.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& c = cells[i];
      try {
        auto report = run(cell_config(spec, c.strategy, c.posture, c.rate, c.seed));
        result.rows[i] = {c.strategy, c.posture, c.rate, c.seed, report};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  result.summary = summarize(result.rows);
  return result;
}

inline constexpr const char* kRunCsvHeader =
    "strategy,posture,rate_pps,seed,generated,delivered,reception_rate,inversions,"
    "total_order_rate,transmissions,mean_delay_s,max_delay_s,loss_atten,loss_collision,"
    "loss_buffer,loss_ttl,loss_pending";

inline std::string format_row(const RunRow& row) {
  const auto& r = row.report;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s,%d,%g,%llu,%llu,%llu,%.6f,%llu,%.6f,%llu,%.6f,%.6f,%llu,%llu,%llu,%llu,%llu",
                std::string(to_string(row.strategy)).c_str(), row.posture.value(), row.rate_pps,
                static_cast<unsigned long long>(row.seed),
                static_cast<unsigned long long>(r.generated),
                static_cast<unsigned long long>(r.delivered_unique), r.reception_rate,
                static_cast<unsigned long long>(r.inversions), r.total_order_rate,
                static_cast<unsigned long long>(r.transmissions), r.mean_delay_s, r.max_delay_s,
                static_cast<unsigned long long>(r.loss.attenuation),
                static_cast<unsigned long long>(r.loss.collision),
                static_cast<unsigned long long>(r.loss.buffer),
                static_cast<unsigned long long>(r.loss.ttl),
                static_cast<unsigned long long>(r.loss.pending));
  return buf;
}

inline void write_rows_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << kRunCsvHeader << '\n';
  for (const auto& row : rows) out << format_row(row) << '\n';
}

inline constexpr const char* kSummaryCsvHeader =
    "strategy,posture,rate_pps,runs,mean_reception_rate,mean_inversions,mean_total_order_rate,"
    "mean_transmissions,mean_delay_s";

inline void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& summary) {
  out << kSummaryCsvHeader << '\n';
  char buf[256];
  for (const auto& c : summary) {
    std::snprintf(buf, sizeof buf, "%s,%d,%g,%zu,%.6f,%.6f,%.6f,%.3f,%.6f\n",
                  std::string(to_string(c.strategy)).c_str(), c.posture.value(), c.rate_pps, c.runs,
                  c.mean_reception_rate, c.mean_inversions, c.mean_total_order_rate,
                  c.mean_transmissions, c.mean_delay_s);
    out << buf;
  }
}

}  // namespace wban
