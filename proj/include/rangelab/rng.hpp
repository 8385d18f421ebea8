#pragma once

#include <cstdint>

namespace rangelab {

/// SplitMix64 output function; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-mode seed splitting: replicate index -> stream seed.
///
/// stream_seed(master, i) = mix64(master ^ mix64(i)).  The mapping is pure
/// and injective in i for a fixed master (mix64 is a bijection), so distinct
/// replicate indices always get distinct stream seeds.  This function is part
/// of the external reproducibility contract: any runner that assigns replicate
/// i the seed stream_seed(master, i) reproduces the same samples.
struct SeedPolicy {
  std::uint64_t master = 0;

  std::uint64_t stream_seed(std::uint64_t replicate) const {
    return mix64(master ^ mix64(replicate));
  }
};

/// xoshiro256++ (Blackman & Vigna), seeded from a single 64-bit stream seed
/// through SplitMix64 as recommended by its authors.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) {
      sm += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
    }
    s_[0] |= 1;  // never the all-zero state
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), exact (Lemire's method with rejection).
  std::uint32_t bounded(std::uint32_t n) {
    std::uint64_t m = (next() >> 32) * static_cast<std::uint64_t>(n);
    auto lo = static_cast<std::uint32_t>(m);
    if (lo < n) {
      const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
      while (lo < threshold) {
        m = (next() >> 32) * static_cast<std::uint64_t>(n);
        lo = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace rangelab
