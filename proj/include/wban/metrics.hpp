#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "wban/packet.hpp"

namespace wban {

enum class Disposition { Delivered, AttenuationLoss, CollisionLoss, BufferDrop, TtlExpired, Pending };

inline std::string_view to_string(Disposition d) {
  switch (d) {
    case Disposition::Delivered: return "delivered";
    case Disposition::AttenuationLoss: return "attenuation";
    case Disposition::CollisionLoss: return "collision";
    case Disposition::BufferDrop: return "buffer";
    case Disposition::TtlExpired: return "ttl";
    case Disposition::Pending: return "pending";
  }
  return "?";
}

enum class DeliveryOutcome { NewInOrder, NewInversion, Duplicate };

struct PacketRecord {
  double generated_at = 0.0;
  std::optional<double> delivered_at;
  int hops = 0;
  // Queued or in-flight copies anywhere in the network.
  int live_copies = 0;
  std::optional<Disposition> last_loss;
};

// One entry per generated packet, plus the sink's per-source high-water
// mark. Sequence numbers start at 1 and are dense per source.
class PacketLedger {
 public:
  explicit PacketLedger(int node_count)
      : records_(static_cast<std::size_t>(node_count)),
        high_water_(static_cast<std::size_t>(node_count), 0) {}

  std::uint32_t generate(NodeId source, double now) {
    auto& list = records_[source];
    list.push_back({now, std::nullopt, 0, 0, std::nullopt});
    ++generated_;
    return static_cast<std::uint32_t>(list.size());
  }

  PacketRecord& at(PacketKey k) { return records_[k.source].at(k.seq - 1); }
  const PacketRecord& at(PacketKey k) const { return records_[k.source].at(k.seq - 1); }

  DeliveryOutcome record_delivery(PacketKey k, double now, int hops = 0) {
    auto& rec = at(k);
    if (rec.delivered_at) {
      ++duplicates_;
      return DeliveryOutcome::Duplicate;
    }
    rec.delivered_at = now;
    rec.hops = hops;
    ++delivered_;
    delivery_order_.push_back(k);
    auto& hw = high_water_[k.source];
    if (k.seq < hw) {
      ++inversions_;
      return DeliveryOutcome::NewInversion;
    }
    hw = k.seq;
    return DeliveryOutcome::NewInOrder;
  }

  void note_loss(PacketKey k, Disposition why) { at(k).last_loss = why; }
  void add_copy(PacketKey k) { ++at(k).live_copies; }
  void remove_copy(PacketKey k) { --at(k).live_copies; }

  // Final disposition; only meaningful once the run has ended.
  Disposition disposition(PacketKey k) const {
    const auto& rec = at(k);
    if (rec.delivered_at) return Disposition::Delivered;
    if (rec.live_copies > 0) return Disposition::Pending;
    // Copies that ended by a forwarding decision (suppression, dead end)
    // rather than a channel or queue event count as hop-budget losses.
    return rec.last_loss.value_or(Disposition::TtlExpired);
  }

  std::uint64_t generated() const { return generated_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t inversions() const { return inversions_; }
  std::uint64_t duplicates() const { return duplicates_; }
  std::uint32_t high_water(NodeId source) const { return high_water_[source]; }
  const std::vector<PacketKey>& delivery_order() const { return delivery_order_; }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t s = 0; s < records_.size(); ++s) {
      for (std::size_t i = 0; i < records_[s].size(); ++i) {
        f(PacketKey{static_cast<NodeId>(s), static_cast<std::uint32_t>(i + 1)}, records_[s][i]);
      }
    }
  }

 private:
  std::vector<std::vector<PacketRecord>> records_;
  std::vector<std::uint32_t> high_water_;
  std::vector<PacketKey> delivery_order_;
  std::uint64_t generated_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t inversions_ = 0;
  std::uint64_t duplicates_ = 0;
};

struct LossBreakdown {
  std::uint64_t attenuation = 0;
  std::uint64_t collision = 0;
  std::uint64_t buffer = 0;
  std::uint64_t ttl = 0;
  std::uint64_t pending = 0;

  std::uint64_t total() const { return attenuation + collision + buffer + ttl + pending; }
  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct MetricsReport {
  std::uint64_t generated = 0;
  std::uint64_t delivered_unique = 0;
  double reception_rate = 0.0;
  std::uint64_t inversions = 0;
  double inversion_rate = 0.0;
  double total_order_rate = 0.0;
  std::uint64_t duplicates = 0;
  std::uint64_t transmissions = 0;
  std::uint64_t data_transmissions = 0;
  double mean_delay_s = 0.0;
  double max_delay_s = 0.0;
  LossBreakdown loss;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct TransmissionCounter {
  std::uint64_t total = 0;
  std::uint64_t data = 0;
};

// Rates are 0 when their denominator is 0.
inline MetricsReport finalize(const PacketLedger& ledger, TransmissionCounter tx = {}) {
  MetricsReport r;
  r.generated = ledger.generated();
  r.delivered_unique = ledger.delivered();
  r.inversions = ledger.inversions();
  r.duplicates = ledger.duplicates();
  r.transmissions = tx.total;
  r.data_transmissions = tx.data;
  if (r.generated > 0) {
    r.reception_rate = static_cast<double>(r.delivered_unique) / static_cast<double>(r.generated);
  }
  if (r.delivered_unique > 0) {
    r.inversion_rate = static_cast<double>(r.inversions) / static_cast<double>(r.delivered_unique);
    r.total_order_rate = 1.0 - r.inversion_rate;
  }

  double delay_sum = 0.0;
  ledger.for_each([&](PacketKey k, const PacketRecord& rec) {
    switch (ledger.disposition(k)) {
      case Disposition::Delivered: {
        double d = *rec.delivered_at - rec.generated_at;
        delay_sum += d;
        r.max_delay_s = std::max(r.max_delay_s, d);
        break;
      }
      case Disposition::AttenuationLoss: ++r.loss.attenuation; break;
      case Disposition::CollisionLoss: ++r.loss.collision; break;
      case Disposition::BufferDrop: ++r.loss.buffer; break;
      case Disposition::TtlExpired: ++r.loss.ttl; break;
      case Disposition::Pending: ++r.loss.pending; break;
    }
  });
  if (r.delivered_unique > 0) r.mean_delay_s = delay_sum / static_cast<double>(r.delivered_unique);
  return r;
}

}  // namespace wban
