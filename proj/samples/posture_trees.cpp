// Prints each posture's min-ETX tree as parent chains.

#include <cstdio>

#include "wban/wban.hpp"

int main(int argc, char** argv) {
  auto table = wban::load_channel_table(argc > 1 ? argv[1] : "data/synthetic_channel.csv");
  for (const auto& [posture, tree] : wban::ppvg_trees_all_postures(table, {}, 0.01, 0)) {
    std::printf("posture %d (%s)\n", posture,
                std::string(wban::PostureId(posture).label()).c_str());
    for (wban::NodeId v = 1; v < table.node_count(); ++v) {
      std::printf("  %d:", v);
      for (auto hop : tree.path_to_sink(v)) std::printf(" %d", hop);
      std::printf("   total ETX %.3f\n", tree.total_etx[v]);
    }
  }
}
