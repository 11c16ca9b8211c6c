#pragma once

// Seeded random streams. Only the raw 64-bit engine output is used; every
// distribution is derived here so draws are identical on every platform
// (the std:: distributions are implementation-defined).

#include <cstdint>
#include <random>
#include <span>
#include <utility>

#include "lineup/normal.hpp"

namespace lineup {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  // Independent stream for (master seed, index). Index 0 is reserved for
  // lineup-level draws; panels use their 1-based display position.
  static RandomStream substream(std::uint64_t master, std::uint64_t index) {
    return RandomStream(master ^ mix64(index ^ 0xD1B54A32D192ED03ull));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), unbiased by rejection.
  std::uint64_t uniform_index(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  double normal(double mean, double sd) {
    return mean + sd * inverse_normal_cdf(uniform01());
  }

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lineup
