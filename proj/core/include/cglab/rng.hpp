#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace cglab {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stable 64-bit FNV-1a; used for config hashes and string-keyed seeds.
std::uint64_t fnv1a(std::string_view bytes);

/// Derives an independent stream seed from a base seed and a path of
/// integers, e.g. derive_seed(seed, {stage, trial, agent}). Order matters.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n), n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

double standard_normal(Rng& rng);

}  // namespace cglab
