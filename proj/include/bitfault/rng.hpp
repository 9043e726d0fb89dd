#ifndef BITFAULT_RNG_HPP
#define BITFAULT_RNG_HPP

#include <cstdint>

namespace bitfault {

// SplitMix64: tiny counter-based generator with a stable cross-platform
// definition, used everywhere a reproducible stream is required.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() { return (next() >> 11) * 0x1.0p-53; }
};

// Order-independent derivation of a stream seed from a base seed and cell
// coordinates, so parallel schedules cannot change any result.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  SplitMix64 g(base);
  std::uint64_t s = g.next();
  g.state = s ^ (a * 0x9e3779b97f4a7c15ULL);
  s = g.next();
  g.state = s ^ (b * 0xc2b2ae3d27d4eb4fULL);
  return g.next();
}

}  // namespace bitfault

#endif
