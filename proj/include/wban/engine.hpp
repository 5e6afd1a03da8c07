#pragma once

// Deterministic discrete-event core. One Simulator instance is one run: it
// owns the clock, the event queue, the RNG stream, every node's radio and
// queues, and the packet ledger. Nothing is shared between runs.
//
// MAC model: one shared channel. A frame at a receiver is lost when the
// receiver transmits during any part of it (half-duplex), when another
// transmission from a neighbour of the receiver overlaps it (collision), or
// when the sampled attenuation exceeds the radio budget. Only links of the
// posture's connectivity graph ever carry frames. Carrier sensing with
// random backoff is on by default (MacParams::carrier_sense = false gives
// pure ALOHA).

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "wban/channel.hpp"
#include "wban/error.hpp"
#include "wban/metrics.hpp"
#include "wban/packet.hpp"
#include "wban/ppvg.hpp"
#include "wban/reliability.hpp"
#include "wban/rng.hpp"
#include "wban/strategies.hpp"
#include "wban/topology.hpp"

namespace wban {

struct MacParams {
  double data_airtime_s = 133.0 * 8.0 / 250000.0;  // 127-byte PSDU plus 6-byte PHY header at 250 kb/s
  double control_airtime_s = 0.0005;
  std::size_t queue_capacity = 64;
  bool carrier_sense = true;
  double turnaround_s = 0.000192;
  double backoff_unit_s = 0.00032;
  int min_backoff_exponent = 3;
  int max_backoff_exponent = 5;
};

struct StrategyParams {
  StrategyKind kind = StrategyKind::PPVG;
  // nullopt selects per strategy: ACK for CTP and ORW, no-ACK repeats for
  // PPVG, none for the rest.
  std::optional<RetransmissionPolicy::Kind> retransmission;
  int ttl = 0;  // 0 selects 2 * (N - 1)
  double request_timeout_s = 0.050;
  double reply_jitter_s = 0.010;
  double route_lifetime_s = 0.100;
  double beacon_period_s = 1.0;
  double ewma_alpha = 0.1;
  double probe_phase_s = 2.0;
  double probe_interval_s = 0.5;
  int ack_max_retries = 3;
  double ack_timeout_s = 0.020;
  double initial_gossip_probability = 1.0;
  std::optional<ParentOverlay> overlay;
};

struct ScenarioConfig {
  BodyTopology topology = default_topology();
  std::shared_ptr<const ChannelTable> table;
  RadioBudget budget;
  double threshold = 0.01;
  PostureId posture{1};
  StrategyParams strategy;
  MacParams mac;
  double rate_pps = 10.0;
  double duration_s = 60.0;
  double drain_s = 1.0;  // run continues this long after generation stops
  std::uint64_t seed = 1;
};

inline RetransmissionPolicy effective_policy(const StrategyParams& s) {
  auto kind = s.retransmission;
  if (!kind) {
    if (s.kind == StrategyKind::CTP || s.kind == StrategyKind::ORW) {
      kind = RetransmissionPolicy::Kind::AckBased;
    } else if (s.kind == StrategyKind::PPVG) {
      kind = RetransmissionPolicy::Kind::NoAckEtxRepeat;
    } else {
      kind = RetransmissionPolicy::Kind::None;
    }
  }
  switch (*kind) {
    case RetransmissionPolicy::Kind::None: return RetransmissionPolicy::none();
    case RetransmissionPolicy::Kind::NoAckEtxRepeat: return RetransmissionPolicy::noack();
    case RetransmissionPolicy::Kind::AckBased:
      return RetransmissionPolicy::ack(s.ack_max_retries, s.ack_timeout_s);
  }
  return RetransmissionPolicy::none();
}

inline int effective_ttl(const ScenarioConfig& cfg) {
  return cfg.strategy.ttl > 0 ? cfg.strategy.ttl : 2 * (cfg.topology.size() - 1);
}

inline void validate_scenario(const ScenarioConfig& cfg) {
  if (!cfg.table) throw ConfigError("scenario has no channel table");
  if (cfg.table->node_count() != cfg.topology.size()) {
    throw ConfigError("channel table covers " + std::to_string(cfg.table->node_count()) +
                      " nodes but the topology declares " + std::to_string(cfg.topology.size()));
  }
  if (!(cfg.rate_pps > 0.0)) throw ConfigError("rate must be > 0");
  if (!(cfg.duration_s > 0.0)) throw ConfigError("duration must be > 0");
  if (cfg.drain_s < 0.0) throw ConfigError("drain must be >= 0");
  if (!(cfg.threshold >= 0.0 && cfg.threshold < 1.0)) throw ConfigError("threshold must be in [0,1)");
  if (!(cfg.mac.data_airtime_s > 0.0) || !(cfg.mac.control_airtime_s > 0.0)) {
    throw ConfigError("airtimes must be > 0");
  }
  if (cfg.mac.queue_capacity == 0) throw ConfigError("queue capacity must be > 0");
  if (cfg.strategy.ttl < 0) throw ConfigError("ttl must be >= 0");
  if (cfg.strategy.initial_gossip_probability <= 0.0 ||
      cfg.strategy.initial_gossip_probability > 1.0) {
    throw ConfigError("initial gossip probability must be in (0,1]");
  }
}

enum class FrameKind { Data, Request, Reply, Beacon, Probe, Ack };

inline std::string_view to_string(FrameKind k) {
  switch (k) {
    case FrameKind::Data: return "data";
    case FrameKind::Request: return "request";
    case FrameKind::Reply: return "reply";
    case FrameKind::Beacon: return "beacon";
    case FrameKind::Probe: return "probe";
    case FrameKind::Ack: return "ack";
  }
  return "?";
}

struct ControlBody {
  std::uint32_t request_id = 0;
  int hop_level = 0;
  double to_sink_db = 0.0;
  double to_source_db = 0.0;
  double cost = 0.0;  // CTP path ETX
  std::uint32_t beacon_seq = 0;
  int probe_cost = 0;  // ORW hop cost
  bool reprobe = false;
  std::uint64_t acked_uid = 0;
};

struct Frame {
  std::uint64_t uid = 0;
  FrameKind kind = FrameKind::Data;
  NodeId tx = 0;
  std::vector<NodeId> receivers;  // intended receivers, ascending
  bool broadcast = false;
  double airtime = 0.0;
  Packet packet;  // Data only
  ControlBody control;
};

enum class ReceptionOutcome { Delivered, AttenuationLoss, Collision, HalfDuplexMiss };

inline std::string_view to_string(ReceptionOutcome o) {
  switch (o) {
    case ReceptionOutcome::Delivered: return "delivered";
    case ReceptionOutcome::AttenuationLoss: return "attenuation";
    case ReceptionOutcome::Collision: return "collision";
    case ReceptionOutcome::HalfDuplexMiss: return "half-duplex";
  }
  return "?";
}

struct AirInterval {
  NodeId tx = 0;
  double start = 0.0;
  double end = 0.0;
  std::uint64_t uid = 0;

  bool overlaps(const AirInterval& o) const { return o.start < end && start < o.end; }
};

// Fate of `frame` at `receiver`, given the attenuation sampled for this
// transmission and every other transmission that may overlap it.
// `interferes(tx, receiver)` tells whether tx's signal reaches the receiver.
template <typename InterferencePredicate>
ReceptionOutcome resolve_reception(const AirInterval& frame, NodeId receiver,
                                   double attenuation_db, const RadioBudget& budget,
                                   std::span<const AirInterval> air,
                                   InterferencePredicate&& interferes) {
  bool collided = false;
  for (const auto& other : air) {
    if (other.uid == frame.uid || !frame.overlaps(other)) continue;
    if (other.tx == receiver) return ReceptionOutcome::HalfDuplexMiss;
    if (other.tx != frame.tx && interferes(other.tx, receiver)) collided = true;
  }
  if (collided) return ReceptionOutcome::Collision;
  if (budget.tx_power_dbm - attenuation_db < budget.sensitivity_dbm) {
    return ReceptionOutcome::AttenuationLoss;
  }
  return ReceptionOutcome::Delivered;
}

struct TraceEvent {
  enum class Type {
    Generate, TxStart, TxEnd, Reception, Enqueue, BufferDrop, TtlDrop, Suppress,
    DuplicateDiscard, Deliver, FrameDone,
  };

  Type type = Type::Generate;
  double time = 0.0;
  NodeId node = 0;
  NodeId peer = -1;
  FrameKind frame_kind = FrameKind::Data;
  std::uint64_t frame_uid = 0;
  bool has_packet = false;
  PacketKey packet;
  int transmission = 0;  // TxStart: 1-based index within the frame; FrameDone: total sent
  int burst = 0;         // planned back-to-back transmissions
  ReceptionOutcome outcome = ReceptionOutcome::Delivered;
  std::vector<NodeId> receivers;  // TxStart and FrameDone only
};

struct Trace {
  std::vector<TraceEvent> events;
};

class Simulator {
 public:
  explicit Simulator(ScenarioConfig cfg, Trace* trace = nullptr)
      : cfg_(std::move(cfg)),
        trace_(trace),
        graph_((validate_scenario(cfg_), connectivity_graph(*cfg_.table, cfg_.posture,
                                                            cfg_.budget, cfg_.threshold))),
        policy_(effective_policy(cfg_.strategy)),
        rng_(cfg_.seed),
        ledger_(cfg_.topology.size()),
        ttl_(effective_ttl(cfg_)) {
    const int n = cfg_.topology.size();
    const NodeId sink = cfg_.topology.sink;
    hops_ = graph_.hop_counts_to(sink);
    for (NodeId v = 0; v < n; ++v) {
      if (hops_[v] < 0) {
        throw ConfigError("node " + std::to_string(v) + " cannot reach sink " +
                          std::to_string(sink) + " in posture " +
                          std::to_string(cfg_.posture.value()));
      }
    }
    const auto kind = cfg_.strategy.kind;
    if (is_multipath(kind)) {
      overlay_ = cfg_.strategy.overlay ? *cfg_.strategy.overlay : hop_gradient_overlay(graph_, sink);
      if (static_cast<int>(overlay_.parents.size()) != n) {
        throw ConfigError("overlay does not cover every node");
      }
      validate_overlay(overlay_, sink);
      for (NodeId v = 0; v < n; ++v) {
        for (auto p : overlay_.parents[v]) {
          if (!graph_.has_edge(v, p)) {
            throw ConfigError("overlay link {" + std::to_string(v) + "," + std::to_string(p) +
                              "} is not a link of posture " +
                              std::to_string(cfg_.posture.value()));
          }
        }
      }
    }
    if (kind == StrategyKind::PPVG) tree_ = build_ppvg_tree(graph_, sink);

    nodes_.resize(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) {
      auto& node = nodes_[v];
      node.id = v;
      node.backoff_exponent = cfg_.mac.min_backoff_exponent;
      if (kind == StrategyKind::CTP) {
        node.ctp = CtpState::make(n, v == sink, cfg_.strategy.ewma_alpha);
      }
      if (kind == StrategyKind::ORW) node.orw = OrwState::make(n, v == sink);
      if (is_attenuation_based(kind)) {
        node.sink_estimate =
            request_reply_attenuation_estimate(v, sink, *cfg_.table, graph_, hops_);
      }
    }
  }

  MetricsReport run() {
    schedule_initial_events();
    const double end = cfg_.duration_s + cfg_.drain_s;
    schedule(end, EventType::SimEnd, TimerKind::None, 0);
    while (!events_.empty()) {
      SimEvent ev = events_.top();
      events_.pop();
      now_ = ev.time;
      ++processed_;
      if (ev.type == EventType::SimEnd) break;
      dispatch(ev);
    }
    return finalize(ledger_, counter_);
  }

  const PacketLedger& ledger() const { return ledger_; }
  const ConnectivityGraph& graph() const { return graph_; }
  const std::optional<PpvgTree>& tree() const { return tree_; }
  std::uint64_t events_processed() const { return processed_; }

 private:
  enum class EventType { PacketGeneration, TxStart, TxEnd, TimerFire, SimEnd };
  enum class TimerKind {
    None, AccessCheck, RequestTimeout, ReplySend, AckSend, AckTimeout, Beacon, ProbeTick,
    ProbeSend, ProbeEnd,
  };

  struct SimEvent {
    double time = 0.0;
    std::uint64_t seq_no = 0;
    EventType type = EventType::SimEnd;
    TimerKind timer = TimerKind::None;
    NodeId node = 0;
    NodeId peer = -1;
    std::uint64_t token = 0;

    // Min-heap on (time, seq_no).
    bool operator<(const SimEvent& o) const {
      return time != o.time ? time > o.time : seq_no > o.seq_no;
    }
  };

  struct QueuedPacket {
    Packet packet;  // as it will travel on the next hop
    NodeId unicast_target = -1;
  };

  struct OutgoingData {
    Frame frame;
    TransmissionSchedule schedule;
    int sent = 0;
    int allowed = 1;  // transmissions permitted so far (burst or 1 + retries used)
    bool awaiting_ack = false;
    bool delivered_any = false;
    std::optional<Disposition> last_failure;

    bool sendable() const { return !awaiting_ack && sent < allowed; }
  };

  struct AttnState {
    std::uint32_t request_id = 0;
    bool outstanding = false;
    std::vector<AttenuationReply> replies;
    std::vector<NodeId> route;
    double route_expires = -1.0;
  };

  struct NodeRuntime {
    NodeId id = 0;
    bool transmitting = false;
    double tx_until = 0.0;
    double last_tx_end = -1.0;
    bool access_pending = false;
    int backoff_exponent = 3;
    std::deque<Frame> control_q;
    std::deque<QueuedPacket> data_q;
    std::optional<OutgoingData> active;
    std::optional<Frame> on_air;
    AirInterval on_air_interval;
    DuplicateCache seen;
    // strategy state
    AttnState attn;
    double sink_estimate = 0.0;
    CtpState ctp;
    std::uint32_t beacon_seq = 0;
    OrwState orw;
    double last_reprobe = -1.0;
  };

  // ----- event plumbing ---------------------------------------------------

  void schedule(double t, EventType type, TimerKind timer, NodeId node, NodeId peer = -1,
                std::uint64_t token = 0) {
    events_.push({t, next_event_seq_++, type, timer, node, peer, token});
  }
  void timer(double t, TimerKind kind, NodeId node, NodeId peer = -1, std::uint64_t token = 0) {
    schedule(t, EventType::TimerFire, kind, node, peer, token);
  }

  void dispatch(const SimEvent& ev) {
    switch (ev.type) {
      case EventType::PacketGeneration: on_generate(ev.node, ev.token); break;
      case EventType::TxStart: on_tx_start(ev.node); break;
      case EventType::TxEnd: on_tx_end(ev.node); break;
      case EventType::TimerFire: on_timer(ev); break;
      case EventType::SimEnd: break;
    }
  }

  void schedule_initial_events() {
    const double interval = 1.0 / cfg_.rate_pps;
    phases_.assign(nodes_.size(), 0.0);
    for (auto src : cfg_.topology.sources) {
      double phase = rng_.uniform(0.0, interval);
      phases_[src] = phase;
      if (phase < cfg_.duration_s) schedule(phase, EventType::PacketGeneration, TimerKind::None, src, -1, 0);
    }
    const auto kind = cfg_.strategy.kind;
    if (kind == StrategyKind::CTP) {
      for (auto& node : nodes_) {
        timer(rng_.uniform(0.0, cfg_.strategy.beacon_period_s), TimerKind::Beacon, node.id);
      }
    }
    if (kind == StrategyKind::ORW) {
      for (auto& node : nodes_) {
        timer(rng_.uniform(0.0, cfg_.strategy.reply_jitter_s), TimerKind::ProbeTick, node.id);
        timer(cfg_.strategy.probe_phase_s, TimerKind::ProbeEnd, node.id);
      }
    }
  }

  void trace(TraceEvent ev) {
    if (!trace_) return;
    ev.time = now_;
    trace_->events.push_back(std::move(ev));
  }

  void trace_packet(TraceEvent::Type type, NodeId node, PacketKey key, NodeId peer = -1) {
    if (!trace_) return;
    TraceEvent ev;
    ev.type = type;
    ev.node = node;
    ev.peer = peer;
    ev.has_packet = true;
    ev.packet = key;
    trace(std::move(ev));
  }

  // ----- traffic ----------------------------------------------------------

  void on_generate(NodeId src, std::uint64_t index) {
    const double interval = 1.0 / cfg_.rate_pps;
    auto seq = ledger_.generate(src, now_);
    Packet pkt{src, seq, now_, ttl_, 0, cfg_.strategy.initial_gossip_probability};
    nodes_[src].seen.insert(pkt.key());
    trace_packet(TraceEvent::Type::Generate, src, pkt.key());
    hand_over(src, pkt);

    double next = phases_[src] + static_cast<double>(index + 1) * interval;
    if (next < cfg_.duration_s) {
      schedule(next, EventType::PacketGeneration, TimerKind::None, src, -1, index + 1);
    }
  }

  // A node holding `pkt` (freshly generated or just received) decides
  // whether and how to pass it on.
  void hand_over(NodeId v, const Packet& pkt) {
    const auto kind = cfg_.strategy.kind;
    if (is_gossip(kind)) {
      auto d = gossip_forward(kind, pkt, graph_.neighbors(v), rng_);
      using A = GossipDecision::Action;
      if (d.action == A::DropTtl || d.action == A::Suppress) {
        ledger_.note_loss(pkt.key(), Disposition::TtlExpired);
        trace_packet(d.action == A::DropTtl ? TraceEvent::Type::TtlDrop : TraceEvent::Type::Suppress,
                     v, pkt.key());
        return;
      }
      Packet next = pkt.forwarded();
      next.gossip_probability = d.carried_probability;
      enqueue(v, {next, d.action == A::Unicast ? d.target : -1});
      return;
    }
    if (pkt.ttl <= 0) {
      ledger_.note_loss(pkt.key(), Disposition::TtlExpired);
      trace_packet(TraceEvent::Type::TtlDrop, v, pkt.key());
      return;
    }
    enqueue(v, {pkt.forwarded(), -1});
  }

  void enqueue(NodeId v, QueuedPacket qp) {
    auto& node = nodes_[v];
    if (node.data_q.size() >= cfg_.mac.queue_capacity) {
      ledger_.note_loss(qp.packet.key(), Disposition::BufferDrop);
      trace_packet(TraceEvent::Type::BufferDrop, v, qp.packet.key());
      return;
    }
    ledger_.add_copy(qp.packet.key());
    trace_packet(TraceEvent::Type::Enqueue, v, qp.packet.key());
    node.data_q.push_back(std::move(qp));
    kick(v);
  }

  // ----- channel access ---------------------------------------------------

  bool channel_busy(NodeId v) const {
    for (const auto& a : air_) {
      if (a.start <= now_ && now_ < a.end && (a.tx == v || graph_.has_edge(a.tx, v))) return true;
    }
    return false;
  }

  // Next-hop receivers for the packet at the head of v's queue, or nullopt
  // while the strategy cannot route yet.
  std::optional<std::vector<NodeId>> route_head(NodeRuntime& node) {
    const auto& head = node.data_q.front();
    const auto kind = cfg_.strategy.kind;
    const NodeId v = node.id;
    if (is_multipath(kind)) {
      return multipath_next_hops(kind, head.packet.source == v, overlay_.parents[v], rng_);
    }
    if (is_attenuation_based(kind)) {
      if (!node.attn.route.empty() && now_ < node.attn.route_expires) return node.attn.route;
      if (!node.attn.outstanding) start_negotiation(node);
      return std::nullopt;
    }
    switch (kind) {
      case StrategyKind::CTP:
        if (node.ctp.parent) return std::vector<NodeId>{*node.ctp.parent};
        return std::nullopt;
      case StrategyKind::ORW:
        if (!node.orw.probing_done) return std::nullopt;
        if (node.orw.forwarder_set.empty()) {
          if (node.last_reprobe < 0.0 ||
              now_ - node.last_reprobe >= cfg_.strategy.probe_interval_s) {
            node.last_reprobe = now_;
            send_probe(node, /*reprobe=*/true);
          }
          return std::nullopt;
        }
        return node.orw.forwarder_set;
      case StrategyKind::FloodToSink:
      case StrategyKind::ProbaCvg: {
        auto nb = graph_.neighbors(v);
        return std::vector<NodeId>(nb.begin(), nb.end());
      }
      case StrategyKind::PrunedCvg: return std::vector<NodeId>{head.unicast_target};
      case StrategyKind::PPVG: return std::vector<NodeId>{ppvg_forward(*tree_, v)};
      default: return std::nullopt;
    }
  }

  // Promotes the queue head to the outgoing data frame when possible.
  void prepare_data(NodeRuntime& node) {
    if (node.active || node.data_q.empty()) return;
    auto receivers = route_head(node);
    if (!receivers) return;
    auto qp = std::move(node.data_q.front());
    node.data_q.pop_front();

    OutgoingData out;
    out.frame.uid = ++next_frame_uid_;
    out.frame.kind = FrameKind::Data;
    out.frame.tx = node.id;
    std::sort(receivers->begin(), receivers->end());
    out.frame.receivers = std::move(*receivers);
    out.frame.broadcast = cfg_.strategy.kind == StrategyKind::FloodToSink ||
                          cfg_.strategy.kind == StrategyKind::ProbaCvg;
    out.frame.airtime = cfg_.mac.data_airtime_s;
    out.frame.packet = qp.packet;
    double etx = 1.0;
    for (auto r : out.frame.receivers) etx = std::max(etx, graph_.edge(node.id, r)->etx);
    out.schedule = apply_policy(policy_, true, etx);
    out.allowed = out.schedule.burst;
    node.active = std::move(out);
  }

  bool has_sendable(NodeRuntime& node) {
    if (!node.control_q.empty()) return true;
    prepare_data(node);
    if (!node.control_q.empty()) return true;  // route discovery may have queued a request
    return node.active && node.active->sendable();
  }

  void kick(NodeId v) {
    auto& node = nodes_[v];
    if (node.transmitting || node.access_pending) return;
    if (!has_sendable(node)) return;
    node.access_pending = true;
    bool continuation = node.control_q.empty() && node.active && node.active->sent > 0 &&
                        !node.active->schedule.await_ack;
    if (cfg_.mac.carrier_sense && !continuation) {
      node.backoff_exponent = cfg_.mac.min_backoff_exponent;
      timer(now_ + backoff_delay(node), TimerKind::AccessCheck, v);
    } else {
      double start = std::max(now_, node.last_tx_end + cfg_.mac.turnaround_s);
      if (node.last_tx_end < 0.0) start = now_;
      schedule(start, EventType::TxStart, TimerKind::None, v);
    }
  }

  double backoff_delay(const NodeRuntime& node) {
    auto slots = std::size_t{1} << node.backoff_exponent;
    return static_cast<double>(rng_.index(slots)) * cfg_.mac.backoff_unit_s;
  }

  void on_access_check(NodeId v) {
    auto& node = nodes_[v];
    if (channel_busy(v)) {
      node.backoff_exponent = std::min(node.backoff_exponent + 1, cfg_.mac.max_backoff_exponent);
      timer(now_ + backoff_delay(node), TimerKind::AccessCheck, v);
      return;
    }
    schedule(now_ + cfg_.mac.turnaround_s, EventType::TxStart, TimerKind::None, v);
  }

  void on_tx_start(NodeId v) {
    auto& node = nodes_[v];
    if (node.transmitting) {
      schedule(node.tx_until + cfg_.mac.turnaround_s, EventType::TxStart, TimerKind::None, v);
      return;
    }
    node.access_pending = false;
    Frame frame;
    int index = 0, burst = 1;
    if (!node.control_q.empty()) {
      frame = std::move(node.control_q.front());
      node.control_q.pop_front();
    } else if (node.active && node.active->sendable()) {
      auto& out = *node.active;
      frame = out.frame;
      index = ++out.sent;
      burst = out.schedule.burst;
    } else {
      kick(v);
      return;
    }
    begin_transmission(node, std::move(frame), index, burst);
  }

  void begin_transmission(NodeRuntime& node, Frame frame, int index, int burst) {
    node.transmitting = true;
    node.tx_until = now_ + frame.airtime;
    air_.push_back({node.id, now_, node.tx_until, next_air_uid_++});
    ++counter_.total;
    if (frame.kind == FrameKind::Data) ++counter_.data;
    if (trace_) {
      TraceEvent ev;
      ev.type = TraceEvent::Type::TxStart;
      ev.node = node.id;
      ev.frame_kind = frame.kind;
      ev.frame_uid = frame.uid;
      ev.has_packet = frame.kind == FrameKind::Data;
      ev.packet = frame.packet.key();
      ev.transmission = index;
      ev.burst = burst;
      ev.receivers = frame.receivers;
      trace(std::move(ev));
    }
    node.on_air = std::move(frame);
    node.on_air_interval = air_.back();
    schedule(node.tx_until, EventType::TxEnd, TimerKind::None, node.id);
  }

  void on_tx_end(NodeId v) {
    auto& node = nodes_[v];
    node.transmitting = false;
    node.last_tx_end = now_;
    Frame frame = std::move(*node.on_air);
    node.on_air.reset();
    const AirInterval interval = node.on_air_interval;
    if (trace_) {
      TraceEvent ev;
      ev.type = TraceEvent::Type::TxEnd;
      ev.node = v;
      ev.frame_kind = frame.kind;
      ev.frame_uid = frame.uid;
      trace(std::move(ev));
    }

    bool any_delivered = false, any_collision = false;
    for (auto r : frame.receivers) {
      const auto& stats = cfg_.table->lookup(cfg_.posture, v, r);
      double attenuation = sample_attenuation(stats, rng_);
      auto outcome = resolve_reception(interval, r, attenuation, cfg_.budget, air_,
                                       [this](NodeId tx, NodeId rx) { return graph_.has_edge(tx, rx); });
      if (trace_) {
        TraceEvent ev;
        ev.type = TraceEvent::Type::Reception;
        ev.node = r;
        ev.peer = v;
        ev.frame_kind = frame.kind;
        ev.frame_uid = frame.uid;
        ev.has_packet = frame.kind == FrameKind::Data;
        ev.packet = frame.packet.key();
        ev.outcome = outcome;
        trace(std::move(ev));
      }
      if (outcome == ReceptionOutcome::Delivered) {
        any_delivered = true;
        on_receive(r, frame);
      } else if (outcome != ReceptionOutcome::AttenuationLoss) {
        any_collision = true;
      }
    }

    if (frame.kind == FrameKind::Data && node.active && node.active->frame.uid == frame.uid) {
      auto& out = *node.active;
      out.delivered_any = out.delivered_any || any_delivered;
      if (!any_delivered) {
        out.last_failure = any_collision ? Disposition::CollisionLoss : Disposition::AttenuationLoss;
      }
      if (out.schedule.await_ack) {
        out.awaiting_ack = true;
        timer(now_ + out.schedule.ack_timeout_s, TimerKind::AckTimeout, v, -1, frame.uid);
      } else if (out.sent >= out.allowed) {
        finish_active(node);
      }
    }
    prune_air();
    kick(v);
  }

  void finish_active(NodeRuntime& node) {
    auto& out = *node.active;
    auto key = out.frame.packet.key();
    if (!out.delivered_any) {
      ledger_.note_loss(key, out.last_failure.value_or(Disposition::AttenuationLoss));
    }
    ledger_.remove_copy(key);
    if (trace_) {
      TraceEvent ev;
      ev.type = TraceEvent::Type::FrameDone;
      ev.node = node.id;
      ev.frame_uid = out.frame.uid;
      ev.has_packet = true;
      ev.packet = key;
      ev.transmission = out.sent;
      ev.burst = out.schedule.burst;
      ev.receivers = out.frame.receivers;
      trace(std::move(ev));
    }
    node.active.reset();
  }

  void prune_air() {
    double horizon = now_ - std::max(cfg_.mac.data_airtime_s, cfg_.mac.control_airtime_s) - 1e-9;
    std::erase_if(air_, [horizon](const AirInterval& a) { return a.end < horizon; });
  }

  // ----- receptions -------------------------------------------------------

  void on_receive(NodeId r, const Frame& frame) {
    switch (frame.kind) {
      case FrameKind::Data: on_data(r, frame); break;
      case FrameKind::Ack: on_ack(r, frame); break;
      case FrameKind::Request: on_request(r, frame); break;
      case FrameKind::Reply: on_reply(r, frame); break;
      case FrameKind::Beacon: on_beacon(r, frame); break;
      case FrameKind::Probe: on_probe(r, frame); break;
    }
  }

  void on_data(NodeId r, const Frame& frame) {
    const auto& pkt = frame.packet;
    if (policy_.kind == RetransmissionPolicy::Kind::AckBased) {
      timer(now_ + cfg_.mac.turnaround_s, TimerKind::AckSend, r, frame.tx, frame.uid);
    }
    if (r == cfg_.topology.sink) {
      ledger_.record_delivery(pkt.key(), now_, pkt.hops);
      trace_packet(TraceEvent::Type::Deliver, r, pkt.key(), frame.tx);
      return;
    }
    auto& node = nodes_[r];
    if (cfg_.strategy.kind == StrategyKind::ORW) {
      if (orw_on_data(frame.receivers, r, node.seen, pkt.key()) != RelayAction::Forward) {
        trace_packet(TraceEvent::Type::DuplicateDiscard, r, pkt.key(), frame.tx);
        return;
      }
    } else if (!node.seen.insert(pkt.key())) {
      trace_packet(TraceEvent::Type::DuplicateDiscard, r, pkt.key(), frame.tx);
      return;
    }
    hand_over(r, pkt);
  }

  void on_ack(NodeId r, const Frame& frame) {
    auto& node = nodes_[r];
    if (!node.active || node.active->frame.uid != frame.control.acked_uid ||
        !node.active->awaiting_ack) {
      return;
    }
    node.active->awaiting_ack = false;
    node.active->delivered_any = true;
    finish_active(node);
    kick(r);
  }

  void on_ack_timeout(NodeId v, std::uint64_t uid) {
    auto& node = nodes_[v];
    if (!node.active || node.active->frame.uid != uid || !node.active->awaiting_ack) return;
    auto& out = *node.active;
    out.awaiting_ack = false;
    if (out.sent <= out.schedule.max_retries) {
      ++out.allowed;
    } else {
      finish_active(node);
    }
    kick(v);
  }

  void send_ack(NodeId v, NodeId to, std::uint64_t uid) {
    auto& node = nodes_[v];
    if (node.transmitting) return;  // radio busy: the ACK is lost
    Frame ack;
    ack.uid = ++next_frame_uid_;
    ack.kind = FrameKind::Ack;
    ack.tx = v;
    ack.receivers = {to};
    ack.airtime = cfg_.mac.control_airtime_s;
    ack.control.acked_uid = uid;
    begin_transmission(node, std::move(ack), 0, 1);
  }

  Frame control_frame(NodeId tx, FrameKind kind, std::vector<NodeId> receivers, bool broadcast) {
    Frame f;
    f.uid = ++next_frame_uid_;
    f.kind = kind;
    f.tx = tx;
    f.receivers = std::move(receivers);
    f.broadcast = broadcast;
    f.airtime = cfg_.mac.control_airtime_s;
    return f;
  }

  std::vector<NodeId> all_neighbors(NodeId v) const {
    auto nb = graph_.neighbors(v);
    return {nb.begin(), nb.end()};
  }

  void push_control(NodeRuntime& node, Frame f) {
    if (node.control_q.size() >= cfg_.mac.queue_capacity) return;
    node.control_q.push_back(std::move(f));
  }

  // Attenuation negotiation: Request -> Replies -> selection at timeout.
  void start_negotiation(NodeRuntime& node) {
    auto& st = node.attn;
    ++st.request_id;
    st.outstanding = true;
    st.replies.clear();
    auto f = control_frame(node.id, FrameKind::Request, all_neighbors(node.id), true);
    f.control.request_id = st.request_id;
    f.control.hop_level = hops_[node.id];
    push_control(node, std::move(f));
    timer(now_ + cfg_.strategy.request_timeout_s, TimerKind::RequestTimeout, node.id, -1,
          st.request_id);
  }

  void on_request(NodeId r, const Frame& frame) {
    // Only nodes closer to the sink than the requester answer.
    if (hops_[r] >= frame.control.hop_level) return;
    timer(now_ + rng_.uniform(0.0, cfg_.strategy.reply_jitter_s), TimerKind::ReplySend, r,
          frame.tx, frame.control.request_id);
  }

  void send_reply(NodeId v, NodeId requester, std::uint32_t request_id) {
    auto f = control_frame(v, FrameKind::Reply, {requester}, false);
    f.control.request_id = request_id;
    f.control.to_sink_db = nodes_[v].sink_estimate;
    f.control.to_source_db = cfg_.table->lookup(cfg_.posture, v, requester).mean_db;
    push_control(nodes_[v], std::move(f));
    kick(v);
  }

  void on_reply(NodeId r, const Frame& frame) {
    auto& st = nodes_[r].attn;
    if (!st.outstanding || frame.control.request_id != st.request_id) return;
    for (const auto& existing : st.replies) {
      if (existing.responder == frame.tx) return;
    }
    st.replies.push_back({frame.tx, frame.control.to_sink_db, frame.control.to_source_db});
  }

  void on_request_timeout(NodeId v, std::uint64_t request_id) {
    auto& node = nodes_[v];
    auto& st = node.attn;
    if (!st.outstanding || st.request_id != request_id) return;
    st.outstanding = false;
    auto selection = attenuation_select(cfg_.strategy.kind, st.replies, rng_);
    if (selection.empty()) {
      start_negotiation(node);
    } else {
      st.route = std::move(selection);
      st.route_expires = now_ + cfg_.strategy.route_lifetime_s;
    }
    kick(v);
  }

  // CTP beacons.
  void send_beacon(NodeId v) {
    auto& node = nodes_[v];
    auto f = control_frame(v, FrameKind::Beacon, all_neighbors(v), true);
    f.control.cost = node.ctp.cost;
    f.control.beacon_seq = node.beacon_seq++;
    push_control(node, std::move(f));
    timer(now_ + cfg_.strategy.beacon_period_s, TimerKind::Beacon, v);
    kick(v);
  }

  void on_beacon(NodeId r, const Frame& frame) {
    auto& node = nodes_[r];
    node.ctp = ctp_on_beacon(std::move(node.ctp), frame.tx, frame.control.cost,
                             frame.control.beacon_seq);
    kick(r);
  }

  // ORW probing.
  void send_probe(NodeRuntime& node, bool reprobe) {
    auto f = control_frame(node.id, FrameKind::Probe, all_neighbors(node.id), true);
    f.control.probe_cost = node.orw.cost;
    f.control.reprobe = reprobe;
    push_control(node, std::move(f));
  }

  void on_probe(NodeId r, const Frame& frame) {
    auto& node = nodes_[r];
    bool improved = orw_on_probe(node.orw, frame.tx, frame.control.probe_cost);
    if (node.orw.probing_done) {
      orw_update_forwarders(node.orw);
      kick(r);
    }
    bool answer = frame.control.reprobe && node.orw.cost != OrwState::kUnknown;
    if (improved || answer) {
      timer(now_ + rng_.uniform(0.0, cfg_.strategy.reply_jitter_s), TimerKind::ProbeSend, r);
    }
  }

  void on_probe_tick(NodeId v) {
    auto& node = nodes_[v];
    if (node.orw.cost != OrwState::kUnknown) {
      send_probe(node, false);
      kick(v);
    }
    double next = now_ + cfg_.strategy.probe_interval_s;
    if (next < cfg_.strategy.probe_phase_s) timer(next, TimerKind::ProbeTick, v);
  }

  void on_probe_end(NodeId v) {
    auto& node = nodes_[v];
    node.orw.probing_done = true;
    orw_update_forwarders(node.orw);
    kick(v);
  }

  void on_timer(const SimEvent& ev) {
    switch (ev.timer) {
      case TimerKind::AccessCheck: on_access_check(ev.node); break;
      case TimerKind::RequestTimeout: on_request_timeout(ev.node, ev.token); break;
      case TimerKind::ReplySend:
        send_reply(ev.node, ev.peer, static_cast<std::uint32_t>(ev.token));
        break;
      case TimerKind::AckSend: send_ack(ev.node, ev.peer, ev.token); break;
      case TimerKind::AckTimeout: on_ack_timeout(ev.node, ev.token); break;
      case TimerKind::Beacon: send_beacon(ev.node); break;
      case TimerKind::ProbeTick: on_probe_tick(ev.node); break;
      case TimerKind::ProbeSend:
        send_probe(nodes_[ev.node], false);
        kick(ev.node);
        break;
      case TimerKind::ProbeEnd: on_probe_end(ev.node); break;
      case TimerKind::None: break;
    }
  }

  ScenarioConfig cfg_;
  Trace* trace_;
  ConnectivityGraph graph_;
  RetransmissionPolicy policy_;
  RngStream rng_;
  PacketLedger ledger_;
  int ttl_;
  std::vector<int> hops_;
  ParentOverlay overlay_;
  std::optional<PpvgTree> tree_;
  std::vector<NodeRuntime> nodes_;
  std::vector<double> phases_;
  std::vector<AirInterval> air_;
  std::priority_queue<SimEvent> events_;
  std::uint64_t next_event_seq_ = 0;
  std::uint64_t next_frame_uid_ = 0;
  std::uint64_t next_air_uid_ = 1;
  std::uint64_t processed_ = 0;
  TransmissionCounter counter_;
  double now_ = 0.0;
};

inline MetricsReport run(const ScenarioConfig& cfg, Trace* trace = nullptr) {
  Simulator sim(cfg, trace);
  return sim.run();
}

}  // namespace wban
