#pragma once

#include <cstdint>
#include <random>

namespace mitodet {

/// Seeded engine used everywhere randomness is needed. mt19937_64's output
/// sequence is fixed by the standard, unlike the std distributions.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection; bound > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  // Values at or above `cutoff` would bias the modulo; redraw them.
  const std::uint64_t cutoff = (Rng::max() / bound) * bound;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < cutoff) return v % bound;
  }
}

/// Uniform integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

}  // namespace mitodet
