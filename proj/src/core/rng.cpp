#include "matchprior/core/rng.hpp"

#include "matchprior/core/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace matchprior {
namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t p : path) {
    state = h ^ (p + 0x632be59bd9b4e019ULL);
    h = splitmix64(state);
  }
  return h;
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t state = seed;
  for (auto& w : s_) w = splitmix64(state);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : Rng(seed) {
  for (std::uint64_t i = 0; i < stream; ++i) jump();
}

Rng::result_type Rng::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

void Rng::jump() {
  static constexpr std::uint64_t kJump[] = {0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL,
                                            0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
  std::array<std::uint64_t, 4> acc{};
  for (std::uint64_t j : kJump)
    for (int b = 0; b < 64; ++b) {
      if (j & (std::uint64_t{1} << b))
        for (int w = 0; w < 4; ++w) acc[static_cast<std::size_t>(w)] ^= s_[static_cast<std::size_t>(w)];
      (*this)();
    }
  s_ = acc;
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(*this);
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    fail(ErrorKind::InvalidHyperparameter,
         "gamma draw needs positive shape and rate (got " + std::to_string(shape) + ", " + std::to_string(rate) + ")");
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(*this);
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0)) fail(ErrorKind::InvalidHyperparameter, "poisson mean must be nonnegative");
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(*this);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "below(0)");
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(*this);
}

}  // namespace matchprior
