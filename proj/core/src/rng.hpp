#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qpi::detail {

// splitmix64 finalizer; spreads structured integer inputs over 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent per-experiment stream seed from (seed, i, t, m); makes the
// sampled counts a pure function of those four values, so parallel
// evaluation order can never change a dataset.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) {
  std::uint64_t x = mix64(seed ^ 0x1F83D9ABFB41BD6BULL);
  x = mix64(x ^ a);
  x = mix64(x ^ b);
  x = mix64(x ^ c);
  return x;
}

// Uniform in [0,1) with 53 bits. std::uniform_real_distribution is
// implementation-defined; this is reproducible across standard libraries.
inline double canonical(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Box-Muller standard normal, built on canonical() for the same reason.
inline double gauss(std::mt19937_64& eng) {
  double u1 = 0;
  do {
    u1 = canonical(eng);
  } while (u1 <= 0);
  const double u2 = canonical(eng);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace qpi::detail
