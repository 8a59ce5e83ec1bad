#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace defnet {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream identifiers keep the randomness of different pipeline stages
/// disjoint even when they share the user seed.
enum class Stream : std::uint64_t {
  Dataset = 1,
  NetworkInit = 2,
  TrainSplit = 3,
  TrainShuffle = 4,
  Evaluation = 5,
  Bench = 6,
};

/// Counter-based seeding: the generator for (seed, stream, index, attempt)
/// depends only on those four values, never on scheduling order.
inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream,
                                std::uint64_t index = 0,
                                std::uint64_t attempt = 0) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ static_cast<std::uint64_t>(stream));
  s = mix64(s ^ index);
  s = mix64(s ^ (attempt * 0x632be59bd9b4e019ULL));
  return std::mt19937_64(s);
}

/// Uniform double in [0, 1) from the top 53 bits; portable across
/// standard libraries, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal draw (Box-Muller, one value per call).
inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Uniform integer in [0, n). Rejection sampling, n > 0.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

}  // namespace defnet
