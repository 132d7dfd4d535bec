#pragma once

#include <cstdint>
#include <random>

namespace depthlayers {

/// Seeded generator with platform-independent draws.
///
/// The standard distributions are implementation-defined, so all draws used
/// by the toolkit go through the explicit mappings below to keep datasets
/// byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], rejection-sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

  /// Child generator for stream `index`; independent of how many draws this one has made.
  static Rng derive(std::uint64_t seed, std::uint64_t index);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace depthlayers
