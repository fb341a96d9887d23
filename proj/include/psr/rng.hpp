#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace psr {

// Deterministic RNG with portable output.
//
// std::mt19937_64's raw 64-bit stream is fully specified by the standard, but
// the distribution adapters (<random> uniform/normal/poisson) are
// implementation-defined. Everything downstream needs bit-exact
// reproducibility across platforms, so all variates here are derived from the
// raw stream with fixed algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent child stream: mixes (seed, stream) through splitmix64 so
  // trials/workers can draw without sharing state.
  Rng child(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

  // Raw 64 bits.
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Uniform on {0, 1, ..., n-1} (rejection sampling, unbiased). n >= 1.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller (pair cached).
  double normal();

  // Exact Poisson sampling:
  //   lambda < 30  -> Knuth multiplication,
  //   lambda >= 30 -> Hörmann's PTRS transformed rejection.
  // No Gaussian approximation at any rate.
  std::int64_t poisson(double lambda);

  // Fisher-Yates partial shuffle: first k entries of a random permutation of
  // {0..n-1}; used for support selection and data splits.
  void sample_indices(std::size_t n, std::size_t k, std::vector<std::size_t>& out);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// splitmix64 step; also used to combine seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Stateless mix of a seed and a stream id into a new seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace psr
