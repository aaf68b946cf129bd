#pragma once

#include <cstdint>
#include <random>

namespace earthvox {

/// Seeded random stream used by every stochastic operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The conversions to uniform reals, bounded integers and normals
/// are done here rather than through <random> distributions, whose outputs
/// differ between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via the Box-Muller transform (one value per call).
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Stateless 64-bit mixer (splitmix64 finalizer) for hashing keys into
/// reproducible pseudo-random values.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace earthvox
