#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ferns {

/// SplitMix64 finalizer. Used to key independent generator streams and to
/// derive child seeds for nested procedures (cross-validation folds, sweep
/// repetitions).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// A seeded random stream identified by (master seed, stream id).
///
/// Equal pairs produce identical sequences on every platform; distinct
/// stream ids produce statistically independent sequences. All sampling
/// helpers are implemented here rather than with <random> distributions,
/// whose output is implementation-defined and would break cross-platform
/// reproducibility.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : engine_(mix64(master_seed ^ mix64(stream_id ^ 0x6a09e667f3bcc909ULL))) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform draw from [0, bound); unbiased via rejection sampling.
  std::uint64_t below(std::uint64_t bound) {
    // 2^64 mod bound, computed without 128-bit arithmetic
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform draw from [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ferns
