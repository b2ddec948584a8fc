#pragma once

// Internal seeding helpers shared by the Monte Carlo paths.  Streams derived
// from (seed, stream_id) are independent and reproducible.

#include <cstdint>
#include <random>

namespace qle::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed,
                                   std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ stream));
}

/// Uniform double in [0, 1) with full 53-bit resolution; avoids the
/// implementation-defined behaviour of std::uniform_real_distribution.
inline double canonical(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace qle::detail
