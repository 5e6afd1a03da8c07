// wbancast: command-line front end for the convergecast simulator.
//
//   wbancast run        --config s.ini [--strategy X --posture P --rate R --seed S --duration D]
//   wbancast sweep      --config s.ini --out rows.csv [--summary means.csv --jobs J]
//   wbancast ppvg-trees --table t.csv [--sink 0]
//   wbancast etx-table  --table t.csv [--posture P]
//   wbancast validate   --config s.ini | --table t.csv
//
// Exit status: 0 ok, 2 configuration error, 3 runtime fault.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wban/wban.hpp"

namespace {

struct Options {
  std::string config;
  std::string table;
  std::string out;
  std::string summary;
  std::string strategy;
  std::string retransmission;
  std::optional<int> posture;
  std::optional<double> rate;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<int> sink;
  unsigned jobs = 0;
};

// Base scenario: the config file if given, else the default body topology
// around a bare table.
wban::ScenarioFile load_base(const Options& o) {
  if (!o.config.empty()) return wban::load_scenario_file(o.config, o.table);
  if (o.table.empty()) throw wban::ConfigError("need --config or --table");
  boost::property_tree::ptree root;
  root.put("channel.table", o.table);
  return wban::load_scenario(root, {}, o.table);
}

void apply_overrides(const Options& o, wban::ScenarioConfig& cfg) {
  if (!o.strategy.empty()) cfg.strategy.kind = wban::parse_strategy(o.strategy);
  if (!o.retransmission.empty()) {
    if (o.retransmission == "auto") {
      cfg.strategy.retransmission.reset();
    } else {
      cfg.strategy.retransmission = wban::parse_retransmission(o.retransmission);
    }
  }
  if (o.posture) cfg.posture = wban::PostureId(*o.posture);
  if (o.rate) cfg.rate_pps = *o.rate;
  if (o.seed) cfg.seed = *o.seed;
  if (o.duration) cfg.duration_s = *o.duration;
  wban::validate_scenario(cfg);
}

// Writes to --out when given, stdout otherwise.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw wban::ConfigError("cannot write '" + path + "'");
  write(out);
}

int cmd_run(const Options& o) {
  auto file = load_base(o);
  apply_overrides(o, file.scenario);
  const auto& cfg = file.scenario;
  wban::RunRow row{cfg.strategy.kind, cfg.posture, cfg.rate_pps, cfg.seed, wban::run(cfg)};
  emit(o.out, [&](std::ostream& out) { wban::write_rows_csv(out, {row}); });
  return 0;
}

int cmd_sweep(const Options& o) {
  auto file = load_base(o);
  auto& spec = file.sweep;
  // Single-value flags pin the corresponding sweep axis.
  apply_overrides(o, spec.base);
  if (!o.strategy.empty()) spec.strategies = {spec.base.strategy.kind};
  if (o.posture) spec.postures = {spec.base.posture};
  if (o.rate) spec.rates = {spec.base.rate_pps};
  if (o.seed) spec.seeds = wban::consecutive_seeds(*o.seed, spec.seeds.size());
  std::fprintf(stderr, "sweep: %zu runs\n", spec.cell_count());
  auto result = wban::run_sweep(spec, o.jobs);
  emit(o.out, [&](std::ostream& out) { wban::write_rows_csv(out, result.rows); });
  if (!o.summary.empty()) {
    emit(o.summary, [&](std::ostream& out) { wban::write_summary_csv(out, result.summary); });
  }
  return 0;
}

int cmd_ppvg_trees(const Options& o) {
  auto file = load_base(o);
  const auto& cfg = file.scenario;
  int sink = o.sink.value_or(cfg.topology.sink);
  auto trees = wban::ppvg_trees_all_postures(*cfg.table, cfg.budget, cfg.threshold, sink);
  emit(o.out, [&](std::ostream& out) {
    wban::write_ppvg_header(out);
    for (const auto& [posture, tree] : trees) {
      if (o.posture && posture != *o.posture) continue;
      wban::write_ppvg_rows(out, tree);
    }
  });
  return 0;
}

int cmd_etx_table(const Options& o) {
  auto file = load_base(o);
  const auto& cfg = file.scenario;
  emit(o.out, [&](std::ostream& out) {
    out << "posture,node_a,node_b,mean_db,stddev_db,probability,etx,usable\n";
    char buf[160];
    for (const auto& r : cfg.table->records()) {
      if (o.posture && r.posture.value() != *o.posture) continue;
      double p = wban::link_success_probability(r, cfg.budget);
      double etx = p > 0.0 ? wban::expected_transmission_count(p) : HUGE_VAL;
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%g,%g,%.6f,%.6f,%d\n", r.posture.value(), r.a, r.b,
                    r.mean_db, r.stddev_db, p, etx, p > cfg.threshold ? 1 : 0);
      out << buf;
    }
  });
  return 0;
}

// Loads everything a run would need and checks every posture can reach the
// sink, without simulating.
int cmd_validate(const Options& o) {
  auto file = load_base(o);
  auto& cfg = file.scenario;
  apply_overrides(o, cfg);
  for (auto posture : wban::PostureId::all()) {
    auto graph = wban::connectivity_graph(*cfg.table, posture, cfg.budget, cfg.threshold);
    auto hops = graph.hop_counts_to(cfg.topology.sink);
    for (wban::NodeId v = 0; v < cfg.topology.size(); ++v) {
      if (hops[v] < 0) {
        throw wban::ConfigError("node " + std::to_string(v) + " cannot reach sink " +
                                std::to_string(cfg.topology.sink) + " in posture " +
                                std::to_string(posture.value()));
      }
    }
  }
  wban::Simulator check(cfg);
  std::cout << "ok: " << cfg.topology.size() << " nodes, table " << file.table_path << ", "
            << file.sweep.cell_count() << " sweep runs\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Body-area convergecast simulator"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "scenario file (INI)");
    sub->add_option("--table", o.table, "channel statistics CSV (overrides the scenario's)");
    sub->add_option("--out", o.out, "output CSV (default stdout)");
  };
  auto scenario_flags = [&](CLI::App* sub) {
    sub->add_option("--strategy", o.strategy, "strategy name");
    sub->add_option("--retransmission", o.retransmission, "auto|none|noack|ack");
    sub->add_option("--posture", o.posture, "posture 1..7");
    sub->add_option("--rate", o.rate, "packets per second per source");
    sub->add_option("--seed", o.seed, "RNG seed (sweep: first seed)");
    sub->add_option("--duration", o.duration, "generation time in seconds");
  };

  auto* run = app.add_subcommand("run", "simulate one scenario");
  common(run);
  scenario_flags(run);
  auto* sweep = app.add_subcommand("sweep", "run a strategy x posture x rate x seed sweep");
  common(sweep);
  scenario_flags(sweep);
  sweep->add_option("--summary", o.summary, "per-cell means CSV");
  sweep->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
  auto* trees = app.add_subcommand("ppvg-trees", "export the per-posture min-ETX trees");
  common(trees);
  trees->add_option("--sink", o.sink, "sink node id");
  trees->add_option("--posture", o.posture, "only this posture");
  auto* etx = app.add_subcommand("etx-table", "link probabilities and ETX per posture");
  common(etx);
  etx->add_option("--posture", o.posture, "only this posture");
  auto* validate = app.add_subcommand("validate", "check a scenario or table without running");
  common(validate);
  scenario_flags(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*trees) return cmd_ppvg_trees(o);
    if (*etx) return cmd_etx_table(o);
    if (*validate) return cmd_validate(o);
  } catch (const wban::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
