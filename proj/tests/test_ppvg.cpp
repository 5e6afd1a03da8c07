#include <gtest/gtest.h>

#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "support.hpp"

using namespace wban;

namespace {

// Minimum over all simple paths v -> sink, summing edge ETX from the sink
// end outward.
double brute_force_min(const ConnectivityGraph& g, NodeId v, NodeId sink) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<NodeId> path{v};
  std::vector<bool> used(static_cast<std::size_t>(g.node_count()), false);
  used[v] = true;
  std::function<void(NodeId)> walk = [&](NodeId u) {
    if (u == sink) {
      double total = 0.0;
      for (std::size_t i = path.size() - 1; i > 0; --i) total += g.edge(path[i], path[i - 1])->etx;
      best = std::min(best, total);
      return;
    }
    for (auto n : g.neighbors(u)) {
      if (used[n]) continue;
      used[n] = true;
      path.push_back(n);
      walk(n);
      path.pop_back();
      used[n] = false;
    }
  };
  walk(v);
  return best;
}

}  // namespace

TEST(Ppvg, TriangleExample) {
  // s=0, a=1, b=2
  ConnectivityGraph g(PostureId(1), 3);
  g.add_edge(0, 1, 0.5);
  g.add_edge(1, 2, 1.0);
  g.add_edge(0, 2, 0.25);
  auto t = build_ppvg_tree(g, 0);
  EXPECT_EQ(t.parent[2], 1);
  EXPECT_EQ(t.total_etx[2], 3.0);
  EXPECT_EQ(t.hops[2], 2);
  EXPECT_EQ(t.path_to_sink(2), (std::vector<NodeId>{2, 1, 0}));
}

TEST(Ppvg, SingleEdge) {
  ConnectivityGraph g(PostureId(1), 2);
  g.add_edge(0, 1, 1.0 / 1.5);
  auto t = build_ppvg_tree(g, 0);
  EXPECT_EQ(t.parent[1], 0);
  EXPECT_NEAR(t.total_etx[1], 1.5, 1e-12);
  EXPECT_FALSE(t.parent[0]);
  EXPECT_EQ(t.total_etx[0], 0.0);
}

TEST(Ppvg, CompleteLosslessGraph) {
  auto g = connectivity_graph(test::perfect_table(7), PostureId(1));
  auto t = build_ppvg_tree(g, 0);
  for (NodeId v = 1; v < 7; ++v) {
    EXPECT_EQ(t.parent[v], 0);
    EXPECT_EQ(t.total_etx[v], 1.0);
  }
}

TEST(Ppvg, TiesPreferFewerHopsThenLowestParent) {
  // 0-1 etx 2, 0-2 etx 1, 2-1 etx 1: both routes to 1 total 2; direct wins.
  ConnectivityGraph g(PostureId(1), 4);
  g.add_edge(0, 1, 0.5);
  g.add_edge(0, 2, 1.0);
  g.add_edge(1, 2, 1.0);
  // 3 via 1 totals 3, via 2 totals 2.
  g.add_edge(1, 3, 1.0);
  g.add_edge(2, 3, 1.0);
  auto t = build_ppvg_tree(g, 0);
  EXPECT_EQ(t.parent[1], 0);
  EXPECT_EQ(t.parent[3], 2);

  // Equal totals and hops: lowest parent id.
  ConnectivityGraph h(PostureId(1), 4);
  h.add_edge(0, 1, 1.0);
  h.add_edge(0, 2, 1.0);
  h.add_edge(1, 3, 1.0);
  h.add_edge(2, 3, 1.0);
  EXPECT_EQ(build_ppvg_tree(h, 0).parent[3], 1);
}

TEST(Ppvg, DisconnectedNodeNamesNodeAndPosture) {
  ConnectivityGraph g(PostureId(5), 3);
  g.add_edge(0, 1, 0.9);
  try {
    build_ppvg_tree(g, 0);
    FAIL();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("node 2"), std::string::npos);
    EXPECT_NE(msg.find("posture 5"), std::string::npos);
  }
}

TEST(Ppvg, RandomGraphsMatchBruteForce) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> prob(0.02, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(gen() % 6);
    ConnectivityGraph g(PostureId(1), n);
    for (NodeId v = 1; v < n; ++v) g.add_edge(static_cast<NodeId>(gen() % v), v, prob(gen));
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        if (!g.has_edge(a, b) && gen() % 2) g.add_edge(a, b, prob(gen));
      }
    }
    NodeId sink = static_cast<NodeId>(gen() % n);
    auto t = build_ppvg_tree(g, sink);
    for (NodeId v = 0; v < n; ++v) {
      if (v == sink) continue;
      EXPECT_EQ(t.total_etx[v], brute_force_min(g, v, sink)) << "trial " << trial << " node " << v;
      EXPECT_EQ(t.total_etx[v], t.link_etx[v] + t.total_etx[*t.parent[v]]);
      EXPECT_EQ(t.path_to_sink(v).back(), sink);
    }
  }
}

TEST(Ppvg, AllPosturesIdenticalStatsGiveIdenticalTrees) {
  auto trees = ppvg_trees_all_postures(test::perfect_table(5), {}, 0.01, 0);
  ASSERT_EQ(trees.size(), 7u);
  for (const auto& [p, tree] : trees) {
    EXPECT_EQ(tree.parent, trees.at(1).parent);
    EXPECT_EQ(tree.total_etx, trees.at(1).total_etx);
  }
}

TEST(Ppvg, PostureErrorIsNamed) {
  auto table = test::make_table(3, [](int posture, NodeId a, NodeId b) -> std::pair<double, double> {
    if (posture == 6 && b == 2) return {90.0, 1.0};
    (void)a;
    return {20.0, 1.0};
  });
  try {
    ppvg_trees_all_postures(table, {}, 0.01, 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("posture 6"), std::string::npos);
  }
}

TEST(Ppvg, ExportHas42Rows) {
  std::ostringstream out;
  write_ppvg_header(out);
  for (const auto& [p, tree] : ppvg_trees_all_postures(*test::shipped_table(), {}, 0.01, 0)) {
    write_ppvg_rows(out, tree);
  }
  std::istringstream in(out.str());
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 42);
}

TEST(Ppvg, ForwardIsParent) {
  ConnectivityGraph g(PostureId(1), 3);
  g.add_edge(0, 1, 0.9);
  g.add_edge(1, 2, 0.9);
  auto t = build_ppvg_tree(g, 0);
  EXPECT_EQ(ppvg_forward(t, 2), 1);
  EXPECT_EQ(ppvg_forward(t, 1), 0);
  EXPECT_THROW(ppvg_forward(t, 0), ConfigError);
}
