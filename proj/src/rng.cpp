#include "cot/rng.hpp"

#include <cmath>

#include "cot/errors.hpp"

namespace cot {

namespace {

// SplitMix64 (Vigna). Used only to derive sub-stream seeds.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

Rng Rng::split(std::uint64_t stream) const {
  std::uint64_t state = seed_;
  std::uint64_t mixed = splitmix64(state);
  state = mixed ^ (stream + 0xa0761d6478bd642fULL);
  return Rng(splitmix64(state));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) {
    throw InputError("Rng::below: bound must be positive");
  }
  // Rejection sampling; threshold is 2^64 mod n, so accepted draws are
  // uniform over a whole number of residue cycles.
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t draw = next_u64();
  while (draw < threshold) {
    draw = next_u64();
  }
  return draw % n;
}

}  // namespace cot
