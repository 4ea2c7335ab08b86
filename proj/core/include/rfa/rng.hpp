#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rfa {

/// Counter-based generator: draw n of stream (key) is splitmix64(key, n).
/// Output depends only on (key, counter), so results are reproducible across
/// platforms and independent streams can be derived without shared state.
class CounterRng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-counter/v1";

  explicit CounterRng(std::uint64_t key) : key_(mix(key ^ 0x6a09e667f3bcc909ULL)) {}

  /// Independent child stream.
  CounterRng derive(std::uint64_t salt) const { return CounterRng(mix(key_ + 0x9e3779b97f4a7c15ULL * (salt + 1))); }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); bound > 0. Rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal by Box-Muller (no cached second variate).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rfa
