#pragma once
// Deterministic randomness helpers.
//
// Everything that feeds persisted results is pinned to std::mt19937_64,
// whose output sequence is fixed by the C++ standard, so seeded runs
// reproduce across platforms. std::uniform_*_distribution is
// implementation-defined and must not be used on these paths.

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace volbench {

// FNV-1a 64-bit over a byte string.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Stable derived seed: FNV-1a over the parent seed's little-endian bytes
// followed by a purpose tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  char le[8];
  for (int i = 0; i < 8; ++i) le[i] = char((seed >> (8 * i)) & 0xff);
  return fnv1a64(tag, fnv1a64(std::string_view(le, 8)));
}

// Unbiased draw in [0, n) by rejection. n must be >= 1.
inline std::uint64_t bounded_uint64(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

// Uniform double in [0, 1) from the top 53 bits of one generator draw.
inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace volbench
