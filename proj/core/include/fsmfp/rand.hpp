#pragma once

#include <cstdint>
#include <random>

namespace fsmfp {

/// splitmix64 step; used to derive independent per-unit seeds from a master
/// seed so parallel units stay deterministic.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

/// Unbiased draw in [0, n). Avoids std::uniform_int_distribution, whose
/// output is implementation-defined; mt19937_64 itself is pinned by the
/// standard, so results are portable.
inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = ~0ull - (~0ull % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double canonical_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_double(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * canonical_double(rng);
}

}  // namespace fsmfp
