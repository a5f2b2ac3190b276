// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random source. Distribution helpers are written out by hand
// because std::uniform_real_distribution and friends are allowed to differ
// across standard library implementations, and reproducibility across
// machines matters more here than sampling throughput.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace hoidet {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return double(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] via rejection, bias-free.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = std::uint64_t(hi - lo) + 1;
    if (span == 0) return std::int64_t(engine_());  // full 64-bit range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return lo + std::int64_t(r % span);
  }

  // Standard normal via Box-Muller; caches the second deviate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Normal truncated to [-2, 2] standard deviations, by rejection.
  double truncated_normal(double mean, double stddev) {
    double z;
    do {
      z = normal();
    } while (z < -2.0 || z > 2.0);
    return mean + stddev * z;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hoidet
