#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "wban/error.hpp"

namespace wban {

struct RetransmissionPolicy {
  enum class Kind { None, NoAckEtxRepeat, AckBased };

  Kind kind = Kind::None;
  int max_retries = 3;
  double ack_timeout_s = 0.020;

  static RetransmissionPolicy none() { return {Kind::None, 0, 0.0}; }
  static RetransmissionPolicy noack() { return {Kind::NoAckEtxRepeat, 0, 0.0}; }
  static RetransmissionPolicy ack(int max_retries = 3, double timeout_s = 0.020) {
    if (max_retries < 0) throw ConfigError("ack max_retries must be >= 0");
    return {Kind::AckBased, max_retries, timeout_s};
  }

  friend bool operator==(const RetransmissionPolicy&, const RetransmissionPolicy&) = default;
};

inline std::string_view to_string(RetransmissionPolicy::Kind k) {
  switch (k) {
    case RetransmissionPolicy::Kind::None: return "none";
    case RetransmissionPolicy::Kind::NoAckEtxRepeat: return "noack";
    case RetransmissionPolicy::Kind::AckBased: return "ack";
  }
  return "?";
}

// Back-to-back copies of one frame under the no-ACK mechanism.
inline int repeat_count(double etx) {
  if (!(etx >= 1.0)) throw ConfigError("ETX " + std::to_string(etx) + " is below 1");
  return static_cast<int>(std::ceil(etx));
}

struct TransmissionSchedule {
  int burst = 1;          // consecutive transmissions before the frame is done
  bool await_ack = false;
  int max_retries = 0;    // extra attempts after a missed ACK
  double ack_timeout_s = 0.0;

  friend bool operator==(const TransmissionSchedule&, const TransmissionSchedule&) = default;
};

// `link_etx` is the ETX of the intended link; for multi-receiver frames the
// caller passes the largest ETX over the receiver set.
inline TransmissionSchedule apply_policy(const RetransmissionPolicy& policy, bool is_data,
                                         double link_etx) {
  if (!is_data) return {};
  switch (policy.kind) {
    case RetransmissionPolicy::Kind::None: return {};
    case RetransmissionPolicy::Kind::NoAckEtxRepeat: return {repeat_count(link_etx), false, 0, 0.0};
    case RetransmissionPolicy::Kind::AckBased:
      return {1, true, policy.max_retries, policy.ack_timeout_s};
  }
  return {};
}

}  // namespace wban
