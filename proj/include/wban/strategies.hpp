#pragma once

// Forwarding decisions of the convergecast strategies. Everything here is a
// pure function of its arguments and the caller's RNG; the engine owns the
// timing, the frames and the per-node state objects.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "wban/channel.hpp"
#include "wban/error.hpp"
#include "wban/packet.hpp"
#include "wban/rng.hpp"

namespace wban {

enum class StrategyKind {
  APAP, APPP, PPAP, PPPP,
  MinAtt, BothMinAtt, CloseToMe, RandAtt,
  CTP, ORW,
  FloodToSink, ProbaCvg, PrunedCvg,
  PPVG,
};

inline constexpr std::array<StrategyKind, 14> kAllStrategies = {
    StrategyKind::APAP,        StrategyKind::APPP,       StrategyKind::PPAP,
    StrategyKind::PPPP,        StrategyKind::MinAtt,     StrategyKind::BothMinAtt,
    StrategyKind::CloseToMe,   StrategyKind::RandAtt,    StrategyKind::CTP,
    StrategyKind::ORW,         StrategyKind::FloodToSink, StrategyKind::ProbaCvg,
    StrategyKind::PrunedCvg,   StrategyKind::PPVG};

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::APAP: return "APAP";
    case StrategyKind::APPP: return "APPP";
    case StrategyKind::PPAP: return "PPAP";
    case StrategyKind::PPPP: return "PPPP";
    case StrategyKind::MinAtt: return "MinAtt";
    case StrategyKind::BothMinAtt: return "BothMinAtt";
    case StrategyKind::CloseToMe: return "CloseToMe";
    case StrategyKind::RandAtt: return "RandAtt";
    case StrategyKind::CTP: return "CTP";
    case StrategyKind::ORW: return "ORW";
    case StrategyKind::FloodToSink: return "FloodToSink";
    case StrategyKind::ProbaCvg: return "ProbaCvg";
    case StrategyKind::PrunedCvg: return "PrunedCvg";
    case StrategyKind::PPVG: return "PPVG";
  }
  return "?";
}

inline StrategyKind parse_strategy(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  for (auto k : kAllStrategies) {
    if (lower(to_string(k)) == lower(name)) return k;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

inline bool is_multipath(StrategyKind k) {
  return k == StrategyKind::APAP || k == StrategyKind::APPP || k == StrategyKind::PPAP ||
         k == StrategyKind::PPPP;
}
inline bool is_attenuation_based(StrategyKind k) {
  return k == StrategyKind::MinAtt || k == StrategyKind::BothMinAtt ||
         k == StrategyKind::CloseToMe || k == StrategyKind::RandAtt;
}
inline bool is_gossip(StrategyKind k) {
  return k == StrategyKind::FloodToSink || k == StrategyKind::ProbaCvg ||
         k == StrategyKind::PrunedCvg;
}

// ---------------------------------------------------------------------------
// Multi-path overlay

struct ParentOverlay {
  std::vector<std::vector<NodeId>> parents;  // ascending per node; empty at the sink
};

// Checks that the overlay is acyclic toward the sink and that every node
// other than the sink has at least one parent.
inline void validate_overlay(const ParentOverlay& overlay, NodeId sink) {
  const auto n = static_cast<NodeId>(overlay.parents.size());
  if (sink < 0 || sink >= n) throw ConfigError("overlay does not contain the sink");
  if (!overlay.parents[sink].empty()) throw ConfigError("the sink cannot have parents");
  for (NodeId v = 0; v < n; ++v) {
    if (v != sink && overlay.parents[v].empty()) {
      throw ConfigError("node " + std::to_string(v) + " has no overlay parent");
    }
    for (auto p : overlay.parents[v]) {
      if (p < 0 || p >= n || p == v) {
        throw ConfigError("node " + std::to_string(v) + " has invalid parent " + std::to_string(p));
      }
    }
  }
  // Depth-first walk along parent links; revisiting an open node is a cycle.
  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on stack, 2 done
  auto visit = [&](auto&& self, NodeId v) -> void {
    if (state[v] == 2) return;
    if (state[v] == 1) throw ConfigError("overlay has a cycle through node " + std::to_string(v));
    state[v] = 1;
    for (auto p : overlay.parents[v]) self(self, p);
    state[v] = 2;
  };
  for (NodeId v = 0; v < n; ++v) visit(visit, v);
}

// parents(v) = graph neighbours strictly closer to the sink in hop count.
inline ParentOverlay hop_gradient_overlay(const ConnectivityGraph& graph, NodeId sink) {
  auto hops = graph.hop_counts_to(sink);
  ParentOverlay overlay;
  overlay.parents.resize(static_cast<std::size_t>(graph.node_count()));
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    if (v == sink) continue;
    if (hops[v] < 0) {
      throw ConfigError("node " + std::to_string(v) + " cannot reach sink " +
                        std::to_string(sink) + " in posture " +
                        std::to_string(graph.posture().value()));
    }
    for (auto u : graph.neighbors(v)) {
      if (hops[u] == hops[v] - 1) overlay.parents[v].push_back(u);
    }
  }
  return overlay;
}

inline std::vector<NodeId> multipath_next_hops(StrategyKind kind, bool is_origin,
                                               std::span<const NodeId> parents, RngStream& rng) {
  if (!is_multipath(kind)) throw ConfigError("not a multi-path strategy");
  if (parents.empty()) throw ConfigError("multi-path forwarding needs at least one parent");
  bool all = false;
  switch (kind) {
    case StrategyKind::APAP: all = true; break;
    case StrategyKind::APPP: all = is_origin; break;
    case StrategyKind::PPAP: all = !is_origin; break;
    default: all = false; break;
  }
  if (all) return {parents.begin(), parents.end()};
  return {parents[rng.index(parents.size())]};
}

// ---------------------------------------------------------------------------
// Attenuation negotiation

struct AttenuationReply {
  NodeId responder = 0;
  double to_sink_db = 0.0;
  double to_source_db = 0.0;
};

// Replies ranked by attenuation to the sink, lowest id first on ties.
inline std::vector<AttenuationReply> rank_by_sink_attenuation(std::span<const AttenuationReply> replies) {
  std::vector<AttenuationReply> ranked(replies.begin(), replies.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.to_sink_db != y.to_sink_db ? x.to_sink_db < y.to_sink_db : x.responder < y.responder;
  });
  return ranked;
}

// Empty when no reply arrived; the caller then reissues its Request.
inline std::vector<NodeId> attenuation_select(StrategyKind kind,
                                              std::span<const AttenuationReply> replies,
                                              RngStream& rng) {
  if (!is_attenuation_based(kind)) throw ConfigError("not an attenuation-based strategy");
  if (replies.empty()) return {};
  auto ranked = rank_by_sink_attenuation(replies);
  switch (kind) {
    case StrategyKind::MinAtt: return {ranked[0].responder};
    case StrategyKind::BothMinAtt: {
      std::vector<NodeId> out{ranked[0].responder};
      if (ranked.size() > 1) out.push_back(ranked[1].responder);
      std::sort(out.begin(), out.end());
      return out;
    }
    case StrategyKind::CloseToMe: {
      if (ranked.size() == 1) return {ranked[0].responder};
      const auto& x = ranked[0];
      const auto& y = ranked[1];
      if (x.to_source_db != y.to_source_db) {
        return {x.to_source_db < y.to_source_db ? x.responder : y.responder};
      }
      return {std::min(x.responder, y.responder)};
    }
    case StrategyKind::RandAtt: {
      std::vector<NodeId> ids;
      for (const auto& r : replies) ids.push_back(r.responder);
      std::sort(ids.begin(), ids.end());
      return {ids[rng.index(ids.size())]};
    }
    default: return {};
  }
}

// Mean attenuation of the responder's best sink-ward link, i.e. the smallest
// mean_db over links to neighbours one hop closer to the sink. The sink
// answers 0 dB; a node with no sink-ward link answers +inf.
inline double request_reply_attenuation_estimate(NodeId responder, NodeId sink,
                                                 const ChannelTable& table,
                                                 const ConnectivityGraph& graph,
                                                 std::span<const int> hop_counts) {
  if (responder == sink) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (auto n : graph.neighbors(responder)) {
    if (hop_counts[n] >= 0 && hop_counts[n] == hop_counts[responder] - 1) {
      best = std::min(best, table.lookup(graph.posture(), responder, n).mean_db);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// CTP

struct CtpNeighbor {
  bool heard = false;
  std::int64_t last_beacon_seq = -1;
  double link_etx = std::numeric_limits<double>::infinity();
  double cost = std::numeric_limits<double>::infinity();
};

struct CtpState {
  bool is_sink = false;
  double cost = std::numeric_limits<double>::infinity();
  std::optional<NodeId> parent;
  double alpha = 0.1;
  std::vector<CtpNeighbor> neighbors;

  static CtpState make(int node_count, bool is_sink, double alpha = 0.1) {
    CtpState s;
    s.is_sink = is_sink;
    s.alpha = alpha;
    s.cost = is_sink ? 0.0 : std::numeric_limits<double>::infinity();
    s.neighbors.resize(static_cast<std::size_t>(node_count));
    return s;
  }
};

// cost = min over heard neighbours of (neighbour cost + link ETX); equal
// costs prefer the lowest id.
inline CtpState ctp_recompute(CtpState state) {
  if (state.is_sink) {
    state.cost = 0.0;
    state.parent.reset();
    return state;
  }
  state.cost = std::numeric_limits<double>::infinity();
  state.parent.reset();
  for (NodeId n = 0; n < static_cast<NodeId>(state.neighbors.size()); ++n) {
    const auto& nb = state.neighbors[n];
    if (!nb.heard) continue;
    double c = nb.cost + nb.link_etx;
    if (c < state.cost) {
      state.cost = c;
      state.parent = n;
    }
  }
  return state;
}

// The beacon sequence gap since the last beacon heard from `from` is the
// reciprocal reception ratio of that window; it feeds an EWMA link ETX.
inline CtpState ctp_on_beacon(CtpState state, NodeId from, double advertised_cost,
                              std::uint32_t beacon_seq) {
  auto& nb = state.neighbors.at(static_cast<std::size_t>(from));
  if (static_cast<std::int64_t>(beacon_seq) > nb.last_beacon_seq) {
    double gap = static_cast<double>(static_cast<std::int64_t>(beacon_seq) - nb.last_beacon_seq);
    nb.link_etx = nb.heard ? (1.0 - state.alpha) * nb.link_etx + state.alpha * gap : gap;
    nb.last_beacon_seq = beacon_seq;
  }
  nb.heard = true;
  nb.cost = advertised_cost;
  return ctp_recompute(std::move(state));
}

// ---------------------------------------------------------------------------
// ORW

struct OrwState {
  static constexpr int kUnknown = std::numeric_limits<int>::max();

  int cost = kUnknown;  // hop count to the sink learnt by probing
  std::vector<int> neighbor_cost;
  std::vector<NodeId> forwarder_set;
  bool probing_done = false;

  static OrwState make(int node_count, bool is_sink) {
    OrwState s;
    s.cost = is_sink ? 0 : kUnknown;
    s.neighbor_cost.assign(static_cast<std::size_t>(node_count), kUnknown);
    return s;
  }
};

// Records a probe; returns true when the node's own cost improved.
inline bool orw_on_probe(OrwState& state, NodeId from, int advertised_cost) {
  state.neighbor_cost.at(static_cast<std::size_t>(from)) =
      std::min(state.neighbor_cost[from], advertised_cost);
  if (advertised_cost != OrwState::kUnknown && advertised_cost + 1 < state.cost) {
    state.cost = advertised_cost + 1;
    return true;
  }
  return false;
}

// Forwarder set = all neighbours with strictly lower cost than this node.
inline void orw_update_forwarders(OrwState& state) {
  state.forwarder_set.clear();
  for (NodeId n = 0; n < static_cast<NodeId>(state.neighbor_cost.size()); ++n) {
    if (state.neighbor_cost[n] < state.cost) state.forwarder_set.push_back(n);
  }
}

class DuplicateCache {
 public:
  // True when the key was not present before.
  bool insert(PacketKey k) { return seen_.insert(k.packed()).second; }
  bool contains(PacketKey k) const { return seen_.count(k.packed()) != 0; }
  std::size_t size() const { return seen_.size(); }

 private:
  std::unordered_set<std::uint64_t> seen_;
};

enum class RelayAction { Forward, DiscardDuplicate, DiscardNotMember };

// A member of the sender's forwarder set forwards each (source, seq) once.
inline RelayAction orw_on_data(std::span<const NodeId> sender_forwarders, NodeId self,
                               DuplicateCache& cache, PacketKey key) {
  if (std::find(sender_forwarders.begin(), sender_forwarders.end(), self) ==
      sender_forwarders.end()) {
    return RelayAction::DiscardNotMember;
  }
  return cache.insert(key) ? RelayAction::Forward : RelayAction::DiscardDuplicate;
}

// ---------------------------------------------------------------------------
// Gossip

struct GossipDecision {
  enum class Action { Broadcast, Unicast, Suppress, DropTtl };

  Action action = Action::Suppress;
  NodeId target = -1;                 // Unicast only
  double carried_probability = 1.0;   // probability the next hop forwards with
};

// Decision of a node holding `packet` (origin or relay). Duplicates are
// filtered by the caller before this point.
inline GossipDecision gossip_forward(StrategyKind kind, const Packet& packet,
                                     std::span<const NodeId> neighbors, RngStream& rng) {
  using A = GossipDecision::Action;
  if (!is_gossip(kind)) throw ConfigError("not a gossip strategy");
  if (packet.ttl <= 0) return {A::DropTtl, -1, packet.gossip_probability};
  switch (kind) {
    case StrategyKind::FloodToSink: return {A::Broadcast, -1, packet.gossip_probability};
    case StrategyKind::ProbaCvg: {
      double p = packet.gossip_probability;
      if (!rng.bernoulli(p)) return {A::Suppress, -1, p};
      return {A::Broadcast, -1, p / 2.0};
    }
    case StrategyKind::PrunedCvg: {
      if (neighbors.empty()) return {A::Suppress, -1, packet.gossip_probability};
      return {A::Unicast, neighbors[rng.index(neighbors.size())], packet.gossip_probability};
    }
    default: return {};
  }
}

}  // namespace wban
