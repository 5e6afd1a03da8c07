#pragma once

// Scenario files are flat INI documents:
//
//   [topology]  size, nodes, sink, sources
//   [channel]   table (path, relative to the scenario file), tx_power_dbm,
//               sensitivity_dbm, threshold
//   [mac]       carrier_sense, data_airtime_s, control_airtime_s,
//               queue_capacity, turnaround_s, backoff_unit_s
//   [strategy]  name, retransmission (auto|none|noack|ack), ttl, timers...
//   [overlay]   <node> = <parent>,<parent>...   (multi-path override)
//   [run]       posture, rate_pps, duration_s, drain_s, seed
//   [sweep]     postures, strategies, rates, seeds, base_seed
//
// Unknown sections or keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wban/channel.hpp"
#include "wban/engine.hpp"
#include "wban/error.hpp"
#include "wban/strategies.hpp"
#include "wban/topology.hpp"

namespace wban {

struct SweepSpec {
  ScenarioConfig base;
  std::vector<StrategyKind> strategies;
  std::vector<PostureId> postures;
  std::vector<double> rates;
  std::vector<std::uint64_t> seeds;

  std::size_t cell_count() const {
    return strategies.size() * postures.size() * rates.size() * seeds.size();
  }
};

inline const std::vector<double>& default_rate_grid() {
  static const std::vector<double> grid = {1, 2, 5, 10, 20, 50, 75, 100, 200, 500};
  return grid;
}

inline std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(base + i);
  return seeds;
}

// Full sweep: every strategy, every posture, the default rate
// grid and ten consecutive seeds.
inline SweepSpec default_sweep(ScenarioConfig base) {
  SweepSpec spec;
  spec.base = std::move(base);
  spec.strategies.assign(kAllStrategies.begin(), kAllStrategies.end());
  auto postures = PostureId::all();
  spec.postures.assign(postures.begin(), postures.end());
  spec.rates = default_rate_grid();
  spec.seeds = consecutive_seeds(spec.base.seed, 10);
  return spec;
}

inline RetransmissionPolicy::Kind parse_retransmission(const std::string& s) {
  if (s == "none") return RetransmissionPolicy::Kind::None;
  if (s == "noack") return RetransmissionPolicy::Kind::NoAckEtxRepeat;
  if (s == "ack") return RetransmissionPolicy::Kind::AckBased;
  throw ConfigError("retransmission must be auto, none, noack or ack (got '" + s + "')");
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (auto field : detail::split(text, ',')) {
    if (field.empty()) continue;
    double v = 0.0;
    if (!detail::parse_number(field, v)) {
      throw ConfigError(what + ": '" + std::string(field) + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

struct ScenarioFile {
  ScenarioConfig scenario;
  SweepSpec sweep;
  std::string table_path;
};

namespace detail {

using boost::property_tree::ptree;

inline void check_keys(const ptree& root) {
  static const std::map<std::string, std::set<std::string>> kKnown = {
      {"topology", {"size", "nodes", "sink", "sources"}},
      {"channel", {"table", "tx_power_dbm", "sensitivity_dbm", "threshold"}},
      {"mac",
       {"carrier_sense", "data_airtime_s", "control_airtime_s", "queue_capacity", "turnaround_s",
        "backoff_unit_s", "min_backoff_exponent", "max_backoff_exponent"}},
      {"strategy",
       {"name", "retransmission", "ttl", "request_timeout_s", "reply_jitter_s",
        "route_lifetime_s", "beacon_period_s", "ewma_alpha", "probe_phase_s", "probe_interval_s",
        "ack_max_retries", "ack_timeout_s", "initial_gossip_probability"}},
      {"overlay", {}},
      {"run", {"posture", "rate_pps", "duration_s", "drain_s", "seed"}},
      {"sweep", {"postures", "strategies", "rates", "seeds", "base_seed"}},
  };
  for (const auto& [section, body] : root) {
    auto it = kKnown.find(section);
    if (it == kKnown.end()) throw ConfigError("unknown config section [" + section + "]");
    if (section == "overlay") continue;
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }
}

template <typename T>
T get(const ptree& root, const std::string& path, T fallback) {
  // get<T>(path, fallback) would also fall back on unparsable values.
  if (!root.get_child_optional(path)) return fallback;
  try {
    return root.get<T>(path);
  } catch (const boost::property_tree::ptree_bad_data&) {
    throw ConfigError("config value '" + path + "' is malformed");
  }
}

}  // namespace detail

// `table_override` replaces [channel] table when non-empty.
inline ScenarioFile load_scenario(const boost::property_tree::ptree& root,
                                  const std::filesystem::path& base_dir,
                                  const std::string& table_override = "") {
  using detail::get;
  detail::check_keys(root);
  ScenarioFile file;
  auto& cfg = file.scenario;

  static const boost::property_tree::ptree kEmpty;
  cfg.topology = load_topology(root.get_child("topology", kEmpty));

  std::string table = table_override.empty() ? get<std::string>(root, "channel.table", "") : table_override;
  if (table.empty()) throw ConfigError("no channel table given ([channel] table or --table)");
  std::filesystem::path table_path(table);
  if (table_override.empty() && table_path.is_relative()) table_path = base_dir / table_path;
  file.table_path = table_path.string();
  cfg.table = std::make_shared<const ChannelTable>(
      load_channel_table(file.table_path, cfg.topology.size()));
  cfg.budget.tx_power_dbm = get(root, "channel.tx_power_dbm", cfg.budget.tx_power_dbm);
  cfg.budget.sensitivity_dbm = get(root, "channel.sensitivity_dbm", cfg.budget.sensitivity_dbm);
  cfg.threshold = get(root, "channel.threshold", cfg.threshold);

  auto& mac = cfg.mac;
  mac.carrier_sense = get(root, "mac.carrier_sense", mac.carrier_sense);
  mac.data_airtime_s = get(root, "mac.data_airtime_s", mac.data_airtime_s);
  mac.control_airtime_s = get(root, "mac.control_airtime_s", mac.control_airtime_s);
  mac.queue_capacity = get(root, "mac.queue_capacity", mac.queue_capacity);
  mac.turnaround_s = get(root, "mac.turnaround_s", mac.turnaround_s);
  mac.backoff_unit_s = get(root, "mac.backoff_unit_s", mac.backoff_unit_s);
  mac.min_backoff_exponent = get(root, "mac.min_backoff_exponent", mac.min_backoff_exponent);
  mac.max_backoff_exponent = get(root, "mac.max_backoff_exponent", mac.max_backoff_exponent);

  auto& st = cfg.strategy;
  st.kind = parse_strategy(get<std::string>(root, "strategy.name", "PPVG"));
  auto retx = get<std::string>(root, "strategy.retransmission", "auto");
  if (retx != "auto") st.retransmission = parse_retransmission(retx);
  st.ttl = get(root, "strategy.ttl", st.ttl);
  st.request_timeout_s = get(root, "strategy.request_timeout_s", st.request_timeout_s);
  st.reply_jitter_s = get(root, "strategy.reply_jitter_s", st.reply_jitter_s);
  st.route_lifetime_s = get(root, "strategy.route_lifetime_s", st.route_lifetime_s);
  st.beacon_period_s = get(root, "strategy.beacon_period_s", st.beacon_period_s);
  st.ewma_alpha = get(root, "strategy.ewma_alpha", st.ewma_alpha);
  st.probe_phase_s = get(root, "strategy.probe_phase_s", st.probe_phase_s);
  st.probe_interval_s = get(root, "strategy.probe_interval_s", st.probe_interval_s);
  st.ack_max_retries = get(root, "strategy.ack_max_retries", st.ack_max_retries);
  st.ack_timeout_s = get(root, "strategy.ack_timeout_s", st.ack_timeout_s);
  st.initial_gossip_probability =
      get(root, "strategy.initial_gossip_probability", st.initial_gossip_probability);

  if (auto overlay = root.get_child_optional("overlay"); overlay && !overlay->empty()) {
    ParentOverlay po;
    po.parents.resize(static_cast<std::size_t>(cfg.topology.size()));
    for (const auto& [key, value] : *overlay) {
      int node = 0;
      if (!detail::parse_number(std::string_view(key), node) || node < 0 ||
          node >= cfg.topology.size()) {
        throw ConfigError("overlay key '" + key + "' is not a node id");
      }
      auto parents = parse_int_list(value.data(), "overlay." + key);
      std::sort(parents.begin(), parents.end());
      po.parents[node] = parents;
    }
    validate_overlay(po, cfg.topology.sink);
    st.overlay = std::move(po);
  }

  cfg.posture = PostureId(get(root, "run.posture", 1));
  cfg.rate_pps = get(root, "run.rate_pps", cfg.rate_pps);
  cfg.duration_s = get(root, "run.duration_s", cfg.duration_s);
  cfg.drain_s = get(root, "run.drain_s", cfg.drain_s);
  cfg.seed = get<std::uint64_t>(root, "run.seed", cfg.seed);
  validate_scenario(cfg);

  auto& sweep = file.sweep;
  sweep = default_sweep(cfg);
  if (auto s = root.get_optional<std::string>("sweep.strategies"); s && *s != "all") {
    sweep.strategies.clear();
    for (auto name : detail::split(*s, ',')) {
      if (!name.empty()) sweep.strategies.push_back(parse_strategy(name));
    }
  }
  if (auto s = root.get_optional<std::string>("sweep.postures"); s && *s != "all") {
    sweep.postures.clear();
    for (int p : parse_int_list(*s, "sweep.postures")) sweep.postures.push_back(PostureId(p));
  }
  if (auto s = root.get_optional<std::string>("sweep.rates")) {
    sweep.rates = parse_double_list(*s, "sweep.rates");
  }
  auto seed_count = get<std::size_t>(root, "sweep.seeds", 10);
  sweep.seeds = consecutive_seeds(get<std::uint64_t>(root, "sweep.base_seed", cfg.seed), seed_count);
  if (sweep.strategies.empty() || sweep.postures.empty() || sweep.rates.empty() ||
      sweep.seeds.empty()) {
    throw ConfigError("sweep axes must all be non-empty");
  }
  for (double r : sweep.rates) {
    if (!(r > 0.0)) throw ConfigError("sweep rates must be > 0");
  }
  return file;
}

inline ScenarioFile load_scenario_file(const std::string& path, const std::string& table_override = "") {
  boost::property_tree::ptree root;
  try {
    boost::property_tree::read_ini(path, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read scenario: ") + e.what());
  }
  return load_scenario(root, std::filesystem::path(path).parent_path(), table_override);
}

}  // namespace wban
