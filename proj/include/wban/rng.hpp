#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace wban {

// Seeded random stream owned by exactly one simulation run. Every random
// decision in a run is drawn from it in event order, so (scenario, seed)
// fixes the whole trace.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix(seed)) {}

  double uniform01() { return unit_(engine_); }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  bool bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform01() < p;
  }

  double normal(double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    return mean + stddev * gauss_(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  // splitmix64 finalizer so that consecutive seeds give unrelated streams.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace wban
