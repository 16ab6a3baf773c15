#pragma once

// Deterministic, platform-independent randomness. Standard-library
// distributions are implementation-defined, so every draw here is built from
// fixed integer arithmetic only.

#include <cstdint>
#include <limits>

namespace dlb {

// splitmix64 finalizer (Vigna). Used as a mixer/hash and to expand seeds.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Per-run seed stream: run k of a sweep with master seed m draws
// splitmix64_mix(m + (k+1) * golden-gamma). Documented contract: stable
// across platforms and insensitive to run scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return splitmix64_mix(master + (counter + 1) * 0x9e3779b97f4a7c15ull);
}

// xoshiro256** (Vigna/Blackman), seeded through splitmix64 as its authors
// recommend. next() is the only primitive; everything else is rejection-based.
class Xoshiro256ss {
 public:
  explicit Xoshiro256ss(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ull;
      word = splitmix64_mix(s);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Unbiased draw from {0, ..., bound-1} by rejection; bound >= 1.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
      draw = next();
    } while (draw >= limit);
    return draw % bound;
  }

  // Uniform integer in [lo, hi], lo <= hi.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Xoshiro256ss& rng) {
  return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

}  // namespace dlb
