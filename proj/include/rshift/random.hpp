#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace rshift {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the index-th independent sub-stream of `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index ^ 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
  return Rng(derive_seed(master, index));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform point in the unit disk, returned through (x, y).
inline void uniform_unit_disk(Rng& rng, double& x, double& y) {
  const double rad = std::sqrt(uniform01(rng));
  const double ang = 2.0 * std::numbers::pi * uniform01(rng);
  x = rad * std::cos(ang);
  y = rad * std::sin(ang);
}

}  // namespace rshift
