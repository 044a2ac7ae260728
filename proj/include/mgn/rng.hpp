#pragma once

#include <cstdint>
#include <random>

namespace mgn {

/// Engine used for every stochastic component. Streams are reproducible on a
/// given platform for a fixed seed.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; decorrelates nearby integer seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace mgn
