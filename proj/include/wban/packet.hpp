#pragma once

#include <cstdint>
#include <functional>

#include "wban/channel.hpp"

namespace wban {

struct PacketKey {
  NodeId source = 0;
  std::uint32_t seq = 0;

  std::uint64_t packed() const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(source)) << 32) | seq;
  }

  friend bool operator==(PacketKey, PacketKey) = default;
  friend auto operator<=>(PacketKey, PacketKey) = default;
};

// Unit of convergecast traffic. `ttl` is the remaining hop budget and
// `hops` the hops taken so far, so hops + ttl is the initial budget.
struct Packet {
  NodeId source = 0;
  std::uint32_t seq = 0;
  double created_at = 0.0;
  int ttl = 0;
  int hops = 0;
  // Forwarding probability carried by probabilistic gossip.
  double gossip_probability = 1.0;

  PacketKey key() const { return {source, seq}; }

  // The copy handed to the next hop.
  Packet forwarded() const {
    Packet p = *this;
    --p.ttl;
    ++p.hops;
    return p;
  }
};

}  // namespace wban

template <>
struct std::hash<wban::PacketKey> {
  std::size_t operator()(wban::PacketKey k) const noexcept {
    return std::hash<std::uint64_t>{}(k.packed());
  }
};
