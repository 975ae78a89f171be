#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sketchout {

using Rng = std::mt19937_64;

/// Deterministic seed for a sub-stream identified by `parts` (e.g. epoch and
/// example index), so parallel and serial runs draw identical numbers.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> parts) {
  const auto mix = [](uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  uint64_t h = mix(base);
  for (uint64_t p : parts) h = mix(h ^ mix(p));
  return h;
}

inline Rng make_rng(uint64_t base, std::initializer_list<uint64_t> parts) {
  return Rng(derive_seed(base, parts));
}

/// Uniform double in [0,1) from 53 random bits; identical across standard
/// library implementations, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [lo, hi].
inline int64_t uniform_int(Rng& rng, int64_t lo, int64_t hi) {
  const auto span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int64_t>(uniform01(rng) * static_cast<double>(span));
}

}  // namespace sketchout
