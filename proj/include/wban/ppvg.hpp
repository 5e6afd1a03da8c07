#pragma once

// Per-posture minimum-total-ETX trees rooted at the sink. Each non-sink node
// keeps exactly one parent; trees are computed offline from the channel
// statistics and never updated during a run.

#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <tuple>
#include <vector>

#include "wban/channel.hpp"
#include "wban/error.hpp"

namespace wban {

struct PpvgTree {
  PostureId posture{1};
  NodeId sink = 0;
  std::vector<std::optional<NodeId>> parent;  // nullopt at the sink
  std::vector<double> link_etx;               // ETX of the edge to the parent, 0 at the sink
  std::vector<double> total_etx;
  std::vector<int> hops;

  int node_count() const { return static_cast<int>(parent.size()); }

  // Nodes from v up to and including the sink.
  std::vector<NodeId> path_to_sink(NodeId v) const {
    std::vector<NodeId> path{v};
    while (parent[v]) {
      v = *parent[v];
      path.push_back(v);
    }
    return path;
  }

  friend bool operator==(const PpvgTree&, const PpvgTree&) = default;
};

// Label-setting shortest paths under edge weight = ETX. Equal totals prefer
// fewer hops, then the lowest parent id. Totals accumulate outward from the
// sink: total(v) = total(parent) + etx(parent, v).
inline PpvgTree build_ppvg_tree(const ConnectivityGraph& graph, NodeId sink) {
  const int n = graph.node_count();
  if (sink < 0 || sink >= n) throw ConfigError("sink " + std::to_string(sink) + " is not a node");

  struct Label {
    double total = std::numeric_limits<double>::infinity();
    int hops = std::numeric_limits<int>::max();
    NodeId parent = std::numeric_limits<NodeId>::max();

    auto key() const { return std::tie(total, hops, parent); }
  };
  std::vector<Label> label(static_cast<std::size_t>(n));
  std::vector<bool> settled(static_cast<std::size_t>(n), false);
  label[sink] = {0.0, 0, -1};

  using Entry = std::tuple<double, int, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  frontier.emplace(0.0, 0, sink);
  while (!frontier.empty()) {
    auto [total, hops, u] = frontier.top();
    frontier.pop();
    if (settled[u]) continue;
    settled[u] = true;
    for (auto v : graph.neighbors(u)) {
      if (settled[v]) continue;
      Label candidate{label[u].total + graph.edge(u, v)->etx, label[u].hops + 1, u};
      if (candidate.key() < label[v].key()) {
        label[v] = candidate;
        frontier.emplace(candidate.total, candidate.hops, v);
      }
    }
  }

  PpvgTree tree;
  tree.posture = graph.posture();
  tree.sink = sink;
  tree.parent.resize(static_cast<std::size_t>(n));
  tree.link_etx.assign(static_cast<std::size_t>(n), 0.0);
  tree.total_etx.assign(static_cast<std::size_t>(n), 0.0);
  tree.hops.assign(static_cast<std::size_t>(n), 0);
  for (NodeId v = 0; v < n; ++v) {
    if (v == sink) continue;
    if (!settled[v]) {
      throw ConfigError("node " + std::to_string(v) + " cannot reach sink " +
                        std::to_string(sink) + " in posture " +
                        std::to_string(graph.posture().value()));
    }
    tree.parent[v] = label[v].parent;
    tree.link_etx[v] = graph.edge(v, label[v].parent)->etx;
    tree.total_etx[v] = label[v].total;
    tree.hops[v] = label[v].hops;
  }
  return tree;
}

inline std::map<int, PpvgTree> ppvg_trees_all_postures(const ChannelTable& table,
                                                       const RadioBudget& budget,
                                                       double threshold, NodeId sink) {
  std::map<int, PpvgTree> trees;
  for (auto posture : PostureId::all()) {
    trees.emplace(posture.value(),
                  build_ppvg_tree(connectivity_graph(table, posture, budget, threshold), sink));
  }
  return trees;
}

inline NodeId ppvg_forward(const PpvgTree& tree, NodeId node) {
  if (!tree.parent[node]) throw ConfigError("the sink does not forward");
  return *tree.parent[node];
}

inline void write_ppvg_header(std::ostream& out) { out << "posture,node,parent,link_etx,total_etx\n"; }

inline void write_ppvg_rows(std::ostream& out, const PpvgTree& tree) {
  char buf[128];
  for (NodeId v = 0; v < tree.node_count(); ++v) {
    if (!tree.parent[v]) continue;
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f,%.6f\n", tree.posture.value(), v, *tree.parent[v],
                  tree.link_etx[v], tree.total_etx[v]);
    out << buf;
  }
}

}  // namespace wban
