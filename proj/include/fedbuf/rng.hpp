#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedbuf {

using Rng = std::mt19937_64;

// Stream tags keep substreams for different purposes disjoint.
enum class Stream : std::uint64_t {
  ClientProfiles = 1,
  Cell = 2,
  Split = 3,
  Shuffle = 4,
  Dropout = 5,
  Init = 6,
  Importance = 7,
  Centralized = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based derivation: the same (seed, stream, keys) always yields the
/// same substream seed, independent of the order in which substreams are used.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                 std::initializer_list<std::uint64_t> keys = {}) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, Stream stream,
                    std::initializer_list<std::uint64_t> keys = {}) {
  return Rng(derive_seed(seed, stream, keys));
}

// Uniform in [0, 1) with 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace fedbuf
