#pragma once

#include <cstdint>
#include <random>

namespace flowcast {

// Stable seed derivation so that every random consumer (detector per sensor,
// forecaster per target, synthetic generator per column, sweep cell) draws
// from its own stream, independent of evaluation order. splitmix64 finalizer
// over (base, role, index).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t role, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (role + 1) + 0xBF58476D1CE4E5B9ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Role tags used across the project.
namespace seed_role {
inline constexpr std::uint64_t synthetic = 1;
inline constexpr std::uint64_t detector = 2;
inline constexpr std::uint64_t forecaster = 3;
inline constexpr std::uint64_t shuffle = 4;
}  // namespace seed_role

// Uniform double in [0, 1) straight from the engine's 64-bit output.
// Unlike std::uniform_real_distribution this is reproducible by construction.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace flowcast
