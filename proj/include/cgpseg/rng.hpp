#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cgpseg {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seedable generator whose output is identical on every platform.
///
/// The engine is std::mt19937_64 (fully specified by the standard). The
/// standard distributions are not, so bounded integers and unit doubles are
/// derived here. Independent streams are obtained with `Rng::stream(seed, k)`:
/// stream k is seeded with mix64(seed ^ mix64(k + 1)).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix64(seed ^ mix64(index + 1)));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi] (inclusive); unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(next());  // full 64-bit range
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
    std::uint64_t draw;
    do {
      draw = next();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cgpseg
