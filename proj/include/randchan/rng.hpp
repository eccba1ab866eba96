#pragma once

#include <cstdint>

namespace randchan::rng {

// All randomized code in this project draws from SplitMix64 streams.  The
// generator is pinned so that results are reproducible bit-for-bit across
// runs, thread counts, and reimplementations in other languages:
//
//   state(0)   = mix(mix(seed + GAMMA) + GAMMA * (stream_id + 1))
//   state(i+1) = state(i) + GAMMA
//   output(i)  = mix(state(i+1))
//
// where GAMMA = 0x9E3779B97F4A7C15 and mix is the 64-bit xorshift-multiply
// finalizer below.  Doubles take the top 53 bits into [0, 1).  Bounded
// integers use multiply-shift with rejection of the biased low fringe.
// Test vectors live in tests/test_rng.cpp and in the README.

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id)
      : state_(mix64(mix64(seed + kGamma) + kGamma * (stream_id + 1))) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  // uniform in [0, 1) with 53 random bits
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, bound), bound >= 1; exact (rejection sampled)
  std::uint32_t next_below(std::uint32_t bound) {
    std::uint64_t x = next_u64() >> 32;
    std::uint64_t m = x * bound;
    auto low = static_cast<std::uint32_t>(m);
    if (low < bound) {
      const std::uint32_t cutoff = static_cast<std::uint32_t>(-bound) % bound;
      while (low < cutoff) {
        x = next_u64() >> 32;
        m = x * bound;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

 private:
  std::uint64_t state_;
};

}  // namespace randchan::rng
