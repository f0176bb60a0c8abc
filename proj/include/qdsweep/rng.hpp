// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "qdsweep/error.hpp"

namespace qds {

/// splitmix64 finalizer; used to derive independent stream seeds from a
/// base seed plus indices (sentence index, training step, rollout index).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a) {
  return splitmix64(splitmix64(base) ^ a);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(mix_seed(base, a) ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

/// Deterministic random stream. All distributions are implemented here
/// (not via std::*_distribution) so that sequences are stable across
/// standard-library versions.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    // u1 == 0 would take log(0); nudge onto (0,1).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Index drawn from an (approximately normalized) probability vector by
  /// inverse CDF. Falls back to the last nonzero entry on accumulated
  /// rounding shortfall.
  int categorical(std::span<const double> probs) {
    if (probs.empty()) throw Error("categorical: empty probability vector");
    const double u = uniform01();
    double cum = 0.0;
    int last_nonzero = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) last_nonzero = static_cast<int>(i);
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    if (last_nonzero < 0) throw Error("categorical: all-zero probability vector");
    return last_nonzero;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  /// Fisher-Yates; stable across standard libraries, unlike std::shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qds
