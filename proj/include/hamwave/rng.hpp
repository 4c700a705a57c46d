// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace hamwave {

/// Seeded pseudo-random stream. The double conversion is done explicitly from
/// the raw 64-bit output so that identical seeds give identical streams on any
/// platform (std::uniform_real_distribution makes no such guarantee).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    // modulo bias is irrelevant here: n is always tiny against 2^64
    return engine_() % n;
  }

  std::uint64_t raw() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

}  // namespace hamwave
