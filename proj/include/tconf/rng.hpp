#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

// Self-contained deterministic random streams (xoshiro256++ seeded via
// SplitMix64). The standard-library distributions are not bit-reproducible
// across implementations, and the output contract of the experiment harness
// is byte-identical CSV for a given seed, so all sampling goes through this.

namespace tconf::rng {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Child-seed derivation: fold path components into the master seed so that
// distinct (trial, module, index) paths get independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  for (std::uint64_t part : path) {
    s ^= part + 0x9E3779B97F4A7C15ull + (s << 12) + (s >> 3);
    (void)splitmix64_next(s);
  }
  return splitmix64_next(s);
}

// Stream tags used when deriving child seeds.
inline constexpr std::uint64_t kStreamTrialData = 1;
inline constexpr std::uint64_t kStreamBayesApprox = 2;
inline constexpr std::uint64_t kStreamBayesLoo = 3;
inline constexpr std::uint64_t kStreamProposal = 4;
inline constexpr std::uint64_t kStreamAcceptV = 5;
inline constexpr std::uint64_t kStreamStability = 6;
inline constexpr std::uint64_t kStreamIndexSubsample = 7;
inline constexpr std::uint64_t kStreamBayesExact = 8;
inline constexpr std::uint64_t kStreamFamilySeed = 9;

class Stream {
 public:
  explicit Stream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64_next(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Standard normal via Box-Muller (no cached spare, keeps the stream layout
  // a pure function of the call sequence).
  double normal() {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Uniform integer in [0, bound) by rejection from the top of the range.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace tconf::rng
