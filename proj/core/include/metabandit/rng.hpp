#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace metabandit {

/// Tags for the independent substreams carved out of one episode seed.
enum class StreamTag : std::uint64_t {
  Instance = 1,
  Reward = 2,
  Policy = 3,
  Oracle = 4,
  SftStep = 5,
  SftEpisode = 6,
};

/// SplitMix64 finalizer. Used both to seed the generator and to derive
/// child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds a path of integers into a child seed: identical (seed, path) gives
/// the identical child on every platform.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

/// Portable pseudo-random stream.
///
/// The engine is xoshiro256** seeded through SplitMix64, so the integer
/// sequence is bit-identical everywhere. Distributions are implemented here
/// rather than through <random> because the standard distributions are not
/// specified bit-for-bit and differ between standard library vendors.
///
/// Satisfies std::uniform_random_bit_generator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) noexcept;

  /// Stream for a substream of `seed`, e.g. `RngStream::child(seed, {tag, arm})`.
  static RngStream child(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    return RngStream(derive_seed(seed, path));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  /// Box-Muller; consumes two words per call (no cached spare).
  double normal(double mean, double stddev) noexcept;
  bool bernoulli(double p) noexcept;
  /// Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;
  double beta(double a, double b) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace metabandit
