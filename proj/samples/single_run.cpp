// Runs PPVG and APAP once each on the shipped table and prints both rows.

#include <iostream>
#include <memory>

#include "wban/wban.hpp"

int main(int argc, char** argv) {
  std::string table = argc > 1 ? argv[1] : "data/synthetic_channel.csv";
  wban::ScenarioConfig cfg;
  cfg.table = std::make_shared<const wban::ChannelTable>(wban::load_channel_table(table, 7));
  cfg.rate_pps = 10;
  cfg.duration_s = 30;

  std::vector<wban::RunRow> rows;
  for (auto kind : {wban::StrategyKind::PPVG, wban::StrategyKind::APAP}) {
    cfg.strategy.kind = kind;
    rows.push_back({kind, cfg.posture, cfg.rate_pps, cfg.seed, wban::run(cfg)});
  }
  wban::write_rows_csv(std::cout, rows);
}
