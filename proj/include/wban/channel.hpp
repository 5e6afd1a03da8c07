#pragma once

// Posture-centric statistical channel: every (posture, node pair) carries a
// Gaussian attenuation N(mean_db, stddev_db). A frame survives a link when
// tx_power - attenuation >= sensitivity, so the link success probability is
// the attenuation CDF evaluated at the radio budget and ETX is its inverse.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wban/error.hpp"
#include "wban/rng.hpp"

namespace wban {

using NodeId = int;

class PostureId {
 public:
  static constexpr int kCount = 7;

  explicit PostureId(int id) : id_(id) {
    if (id < 1 || id > kCount) {
      throw ConfigError("posture id " + std::to_string(id) + " outside 1..7");
    }
  }

  int value() const { return id_; }
  std::size_t index() const { return static_cast<std::size_t>(id_ - 1); }

  std::string_view label() const {
    static constexpr std::array<std::string_view, kCount> kLabels = {
        "Walking",    "Walking weakly", "Running",         "Sitting down",
        "Lying down", "Sleeping",       "Wearing a jacket"};
    return kLabels[index()];
  }

  static std::array<PostureId, kCount> all() {
    return {PostureId(1), PostureId(2), PostureId(3), PostureId(4),
            PostureId(5), PostureId(6), PostureId(7)};
  }

  friend bool operator==(PostureId, PostureId) = default;
  friend auto operator<=>(PostureId, PostureId) = default;

 private:
  int id_;
};

struct LinkStats {
  PostureId posture{1};
  NodeId a = 0;
  NodeId b = 1;
  double mean_db = 0.0;
  double stddev_db = 0.0;
};

struct RadioBudget {
  double tx_power_dbm = -60.0;
  double sensitivity_dbm = -100.0;

  double max_attenuation_db() const { return tx_power_dbm - sensitivity_dbm; }
};

// P[N(mean, stddev) < x]. A zero deviation degenerates to a step with value
// 0.5 at the mean.
inline double gaussian_cdf(double x, double mean, double stddev) {
  if (stddev == 0.0) {
    if (x > mean) return 1.0;
    if (x < mean) return 0.0;
    return 0.5;
  }
  return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0)));
}

inline double link_success_probability(const LinkStats& stats, const RadioBudget& budget) {
  return gaussian_cdf(budget.max_attenuation_db(), stats.mean_db, stats.stddev_db);
}

inline double expected_transmission_count(double p) {
  if (!(p > 0.0)) {
    throw UnusableLink("link success probability " + std::to_string(p) +
                       " has no finite ETX");
  }
  return 1.0 / p;
}

inline double sample_attenuation(const LinkStats& stats, RngStream& rng) {
  return rng.normal(stats.mean_db, stats.stddev_db);
}

// One LinkStats per (posture, unordered pair), total over all pairs of an
// N-node topology. Links are symmetric.
class ChannelTable {
 public:
  ChannelTable() = default;

  // Validates and indexes records; `node_count` fixes the declared pair set.
  static ChannelTable from_records(std::span<const LinkStats> records, int node_count) {
    ChannelTable table(node_count);
    for (const auto& r : records) table.insert(r, "");
    table.check_total();
    return table;
  }

  int node_count() const { return node_count_; }

  const LinkStats& lookup(PostureId posture, NodeId a, NodeId b) const {
    const auto& slot = slots_[posture.index()][slot_index(a, b)];
    if (!slot) {
      throw ConfigError("channel table has no statistics for posture " +
                        std::to_string(posture.value()) + " pair {" + pair_name(a, b) + "}");
    }
    return *slot;
  }

  std::vector<LinkStats> records() const {
    std::vector<LinkStats> out;
    for (const auto& posture : slots_) {
      for (const auto& s : posture) {
        if (s) out.push_back(*s);
      }
    }
    return out;
  }

 private:
  friend ChannelTable load_channel_table(std::istream&, std::optional<int>, const std::string&);

  explicit ChannelTable(int node_count) : node_count_(node_count) {
    if (node_count < 2) throw ConfigError("channel table needs at least two nodes");
    for (auto& p : slots_) p.resize(static_cast<std::size_t>(node_count * node_count));
  }

  static std::string pair_name(NodeId a, NodeId b) {
    return std::to_string(std::min(a, b)) + "," + std::to_string(std::max(a, b));
  }

  std::size_t slot_index(NodeId a, NodeId b) const {
    if (a < 0 || b < 0 || a >= node_count_ || b >= node_count_ || a == b) {
      throw ConfigError("invalid node pair {" + std::to_string(a) + "," + std::to_string(b) +
                        "} for a " + std::to_string(node_count_) + "-node topology");
    }
    auto lo = std::min(a, b), hi = std::max(a, b);
    return static_cast<std::size_t>(lo * node_count_ + hi);
  }

  void insert(LinkStats r, const std::string& where) {
    auto fail = [&](const std::string& why) { throw ConfigError(where + why); };
    if (r.a == r.b) fail("link endpoints must differ");
    if (r.a < 0 || r.b < 0 || r.a >= node_count_ || r.b >= node_count_) {
      fail("node id outside 0.." + std::to_string(node_count_ - 1));
    }
    if (!std::isfinite(r.mean_db) || !std::isfinite(r.stddev_db)) fail("non-finite statistic");
    if (r.stddev_db < 0.0) fail("negative stddev_db");
    auto& slot = slots_[r.posture.index()][slot_index(r.a, r.b)];
    if (slot) {
      fail("duplicate statistics for posture " + std::to_string(r.posture.value()) + " pair {" +
           pair_name(r.a, r.b) + "}");
    }
    if (r.a > r.b) std::swap(r.a, r.b);
    slot = r;
  }

  void check_total() const {
    for (auto posture : PostureId::all()) {
      for (NodeId a = 0; a < node_count_; ++a) {
        for (NodeId b = a + 1; b < node_count_; ++b) {
          if (!slots_[posture.index()][slot_index(a, b)]) {
            throw ConfigError("channel table is missing posture " +
                              std::to_string(posture.value()) + " pair {" + pair_name(a, b) + "}");
          }
        }
      }
    }
  }

  int node_count_ = 0;
  std::array<std::vector<std::optional<LinkStats>>, PostureId::kCount> slots_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

// Reads `posture,node_a,node_b,mean_db,stddev_db` rows. Without an explicit
// node count the topology size is inferred as max node id + 1.
inline ChannelTable load_channel_table(std::istream& in, std::optional<int> node_count,
                                       const std::string& source_name = "channel table") {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  struct Row {
    std::size_t line;
    LinkStats stats;
  };
  std::vector<Row> rows;
  int max_id = -1;

  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto where = source_name + ":" + std::to_string(line_no) + ": ";
    if (!header_seen) {
      if (view != "posture,node_a,node_b,mean_db,stddev_db") {
        throw ConfigError(where + "expected header 'posture,node_a,node_b,mean_db,stddev_db'");
      }
      header_seen = true;
      continue;
    }
    auto fields = detail::split(view, ',');
    if (fields.size() != 5) {
      throw ConfigError(where + "expected 5 fields, got " + std::to_string(fields.size()));
    }
    int posture = 0;
    LinkStats stats;
    if (!detail::parse_number(fields[0], posture) || !detail::parse_number(fields[1], stats.a) ||
        !detail::parse_number(fields[2], stats.b) ||
        !detail::parse_number(fields[3], stats.mean_db) ||
        !detail::parse_number(fields[4], stats.stddev_db)) {
      throw ConfigError(where + "malformed row '" + std::string(view) + "'");
    }
    try {
      stats.posture = PostureId(posture);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    max_id = std::max({max_id, stats.a, stats.b});
    rows.push_back({line_no, stats});
  }
  if (!header_seen) throw ConfigError(source_name + ": empty channel table");

  ChannelTable table(node_count.value_or(max_id + 1));
  for (const auto& row : rows) {
    table.insert(row.stats, source_name + ":" + std::to_string(row.line) + ": ");
  }
  try {
    table.check_total();
  } catch (const ConfigError& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return table;
}

inline ChannelTable load_channel_table(const std::string& path,
                                       std::optional<int> node_count = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open channel table '" + path + "'");
  return load_channel_table(in, node_count, path);
}

inline void write_channel_table(std::ostream& out, const ChannelTable& table) {
  out << "posture,node_a,node_b,mean_db,stddev_db\n";
  auto precision = out.precision(17);
  for (const auto& r : table.records()) {
    out << r.posture.value() << ',' << r.a << ',' << r.b << ',' << r.mean_db << ','
        << r.stddev_db << '\n';
  }
  out.precision(precision);
}

struct GraphEdge {
  NodeId a = 0;  // a < b
  NodeId b = 0;
  double probability = 0.0;
  double etx = 0.0;
};

// Links of one posture whose success probability exceeds the threshold.
class ConnectivityGraph {
 public:
  ConnectivityGraph(PostureId posture, int node_count)
      : posture_(posture),
        node_count_(node_count),
        adjacency_(static_cast<std::size_t>(node_count)),
        edge_of_(static_cast<std::size_t>(node_count * node_count), kNone) {}

  void add_edge(NodeId a, NodeId b, double probability) {
    if (a > b) std::swap(a, b);
    edge_of_[index(a, b)] = edge_of_[index(b, a)] = edges_.size();
    edges_.push_back({a, b, probability, expected_transmission_count(probability)});
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
    std::sort(adjacency_[a].begin(), adjacency_[a].end());
    std::sort(adjacency_[b].begin(), adjacency_[b].end());
  }

  PostureId posture() const { return posture_; }
  int node_count() const { return node_count_; }
  std::span<const GraphEdge> edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }

  const GraphEdge* edge(NodeId a, NodeId b) const {
    if (a == b) return nullptr;
    auto i = edge_of_[index(a, b)];
    return i == kNone ? nullptr : &edges_[i];
  }
  bool has_edge(NodeId a, NodeId b) const { return edge(a, b) != nullptr; }

  // BFS hop distance to `root`; -1 for unreachable nodes.
  std::vector<int> hop_counts_to(NodeId root) const {
    std::vector<int> hops(static_cast<std::size_t>(node_count_), -1);
    std::queue<NodeId> frontier;
    hops[root] = 0;
    frontier.push(root);
    while (!frontier.empty()) {
      auto v = frontier.front();
      frontier.pop();
      for (auto n : adjacency_[v]) {
        if (hops[n] < 0) {
          hops[n] = hops[v] + 1;
          frontier.push(n);
        }
      }
    }
    return hops;
  }

  friend bool operator==(const ConnectivityGraph& x, const ConnectivityGraph& y) {
    if (x.posture_ != y.posture_ || x.edges_.size() != y.edges_.size()) return false;
    for (std::size_t i = 0; i < x.edges_.size(); ++i) {
      const auto& e = x.edges_[i];
      const auto& f = y.edges_[i];
      if (e.a != f.a || e.b != f.b || e.probability != f.probability || e.etx != f.etx) return false;
    }
    return true;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t index(NodeId a, NodeId b) const { return static_cast<std::size_t>(a * node_count_ + b); }

  PostureId posture_;
  int node_count_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::size_t> edge_of_;
};

inline ConnectivityGraph connectivity_graph(const ChannelTable& table, PostureId posture,
                                            const RadioBudget& budget = {},
                                            double threshold = 0.01) {
  ConnectivityGraph graph(posture, table.node_count());
  for (NodeId a = 0; a < table.node_count(); ++a) {
    for (NodeId b = a + 1; b < table.node_count(); ++b) {
      double p = link_success_probability(table.lookup(posture, a, b), budget);
      if (p > threshold) graph.add_edge(a, b, p);
    }
  }
  return graph;
}

}  // namespace wban
