#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "wban/wban.hpp"

namespace wban::test {

using Pair = std::pair<NodeId, NodeId>;

// Mean attenuation giving success probability p over the default 40 dB
// budget, via Boost's normal quantile.
inline double mean_for_probability(double p, double sd) {
  boost::math::normal_distribution<double> unit(0.0, 1.0);
  return 40.0 - sd * boost::math::quantile(unit, p);
}

// Every posture uses the stats returned by `stats(posture, a, b)`.
inline ChannelTable make_table(int n,
                               const std::function<std::pair<double, double>(int, NodeId, NodeId)>& stats) {
  std::vector<LinkStats> records;
  for (auto posture : PostureId::all()) {
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        auto [mean, sd] = stats(posture.value(), a, b);
        records.push_back({posture, a, b, mean, sd});
      }
    }
  }
  return ChannelTable::from_records(records, n);
}

// Links listed in `links` get the given success probability (sd 5), every
// other pair is far below the connectivity threshold.
inline ChannelTable table_from_probabilities(int n, const std::map<Pair, double>& links,
                                             double sd = 5.0) {
  return make_table(n, [&](int, NodeId a, NodeId b) -> std::pair<double, double> {
    auto it = links.find({a, b});
    if (it == links.end()) return {90.0, sd};
    if (it->second >= 1.0) return {0.0, 0.0};  // deterministic success
    return {mean_for_probability(it->second, sd), sd};
  });
}

// All pairs lossless.
inline ChannelTable perfect_table(int n) {
  return make_table(n, [](int, NodeId, NodeId) { return std::pair{20.0, 0.0}; });
}

inline ScenarioConfig scenario(ChannelTable table, StrategyKind kind, double rate = 1.0,
                               double duration = 10.0, std::uint64_t seed = 1) {
  ScenarioConfig cfg;
  int n = table.node_count();
  if (n != 7) {
    std::vector<BodyNode> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({i, "n" + std::to_string(i)});
    cfg.topology = make_topology(nodes, 0);
  }
  cfg.table = std::make_shared<const ChannelTable>(std::move(table));
  cfg.strategy.kind = kind;
  cfg.rate_pps = rate;
  cfg.duration_s = duration;
  cfg.seed = seed;
  return cfg;
}

inline std::shared_ptr<const ChannelTable> shipped_table() {
  static auto table =
      std::make_shared<const ChannelTable>(load_channel_table(WBAN_DATA_DIR "/synthetic_channel.csv", 7));
  return table;
}

inline std::string csv_of(const std::vector<RunRow>& rows) {
  std::ostringstream out;
  write_rows_csv(out, rows);
  return out.str();
}

}  // namespace wban::test
