#pragma once

#include <cstdint>
#include <random>

namespace irf {

/// Project-wide random source: mt19937_64 for the bit stream, with the
/// derived distributions implemented here so that sequences are identical
/// across standard libraries (std::normal_distribution and friends are not
/// specified bit-for-bit).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Marsaglia's polar method.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Seed for stream `index` under a parent seed, e.g. tree t of a forest.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

}  // namespace irf
