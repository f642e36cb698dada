#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace matchprior {

/// SplitMix64 finalizer; used for seed derivation and state expansion.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic seed for a sub-task, e.g. derive_seed(seed, {n, rep}).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// xoshiro256** engine. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);
  /// Independent stream: the base sequence advanced by `stream` jumps of 2^128.
  Rng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Advances the state by 2^128 draws.
  void jump();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential(double rate = 1.0);
  /// Gamma with shape and rate (density proportional to x^{shape-1} e^{-rate x}).
  double gamma(double shape, double rate);
  std::uint64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace matchprior
