#pragma once

#include <cstdint>
#include <random>

namespace cwr {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) from the top 53 bits of one generator output.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for one (sweep point, replica) pair. The constants are part of
/// the output contract: changing them changes every emitted sample.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point, std::uint64_t replica) {
  std::uint64_t h = splitmix64(master ^ 0x5157'4d52'2d43'5752ULL);
  h = splitmix64(h ^ (point * 0xd6e8feb86659fd93ULL));
  h = splitmix64(h ^ (replica * 0xa0761d6478bd642fULL));
  return h;
}

}  // namespace cwr
