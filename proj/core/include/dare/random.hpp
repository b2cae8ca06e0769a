#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace dare {

/// Seeded generator used everywhere randomness enters the pipeline.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The conversions to doubles, normals and bounded integers are
/// done here instead of through <random> distributions, whose algorithms
/// are implementation-defined, so that seeded runs reproduce bit-for-bit
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Mixes a base seed with a stream id (splitmix64 finalizer). Used to give
/// each tree node, fold and layer its own independent stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Fisher-Yates shuffle driven by Rng::below.
void shuffle(std::span<std::size_t> values, Rng& rng);

}  // namespace dare
