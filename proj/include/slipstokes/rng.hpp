#pragma once

#include <cstdint>
#include <random>

#include "slipstokes/common.hpp"

namespace slipstokes {

/// Deterministic random source. All randomized fixtures in the project draw
/// from this so that a (config, seed) pair reproduces bit-identical runs.
/// Distribution helpers are hand-rolled: std::uniform_real_distribution and
/// friends are implementation-defined and would tie outputs to the standard
/// library version.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] by rejection; unbiased.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    SS_REQUIRE(hi >= lo, "Rng::uniform_int: empty range [%lld, %lld]",
               static_cast<long long>(lo), static_cast<long long>(hi));
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t r;
    do {
      r = eng_();
    } while (r >= limit);
    return lo + static_cast<int64_t>(r % span);
  }

  /// Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace slipstokes
