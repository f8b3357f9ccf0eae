#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cot {

/// Seeded pseudo-randomness for the whole lab.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard, so a given seed reproduces a byte-identical stream of draws.
/// Sub-streams derived with split() get their seeds from SplitMix64, so each
/// consumer (parameter init, batch shuffling, data synthesis) owns an
/// independent stream and extra draws in one never perturb another.
///
/// A single Rng value is single-owner: do not share one instance across
/// threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Derives an independent sub-stream; `stream` identifies the consumer.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  /// Standard normal via Box-Muller (two uniforms per call, no cached spare).
  double normal();

  /// Unbiased uniform draw from {0, ..., n-1}; n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
};

/// Fixed stream ids, one per consumer.
namespace streams {
inline constexpr std::uint64_t kInit = 0;
inline constexpr std::uint64_t kShuffle = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kSplit = 3;
}  // namespace streams

}  // namespace cot
