#pragma once

#include <cstdint>

#include "uqpe/math.hpp"

namespace uqpe {

// SplitMix64 stream (Steele, Lea & Flood; Vigna's fixed-increment variant).
// Streams are splittable: child(k) of a stream seeded with s is seeded with
// mix64(s ^ mix64((k + 1) * 0x9E3779B97F4A7C15)), which decorrelates
// arbitrarily nested derivations. All resampling and simulation seeds in this
// project are derived through child(), so results are reproducible from a
// single 64-bit master seed regardless of scheduling.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed), state_(seed) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed() const { return seed_; }

  SplitMix64 child(std::uint64_t index) const {
    return SplitMix64(mix64(seed_ ^ mix64((index + 1) * 0x9E3779B97F4A7C15ULL)));
  }

  // Uniform on [0,1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0,1); safe input for inverse CDFs.
  double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  // Unbiased integer in [0, n) via Lemire's multiply-shift rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = -n % n;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Deterministic inverse-CDF sampling keeps draws identical across
  // platforms and thread counts.
  double normal() { return normal_quantile(uniform_open()); }

  double chi2_standardized() {
    double z = normal();
    return (z * z - 1.0) / kSqrt2;
  }

  double draw(UDist dist) {
    return dist == UDist::normal ? normal() : chi2_standardized();
  }

private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

} // namespace uqpe
