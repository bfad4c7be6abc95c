#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace sgdlab {

// One splitmix64 step; advances state and returns the mixed output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic seed derivation for substreams (per-epoch, per-run, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  return splitmix64(s);
}

// Stream tags: unrelated draws sharing one run seed never share a stream.
inline constexpr std::uint64_t kSigmaStream = 0x5157;   // per-run incremental orders
inline constexpr std::uint64_t kTheta0Stream = 0x7E70;  // initial points

// xoshiro256** with splitmix64 state fill. All experiment randomness goes
// through this generator so every run replays exactly from its recorded
// (seed, stream) pair; the algorithm identifier travels with emitted results.
class Xoshiro256 {
 public:
  static constexpr const char* algorithm_id = "splitmix64-xoshiro256**";

  explicit Xoshiro256(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    bool any = false;
    for (auto& word : state_) {
      word = splitmix64(s);
      any = any || word != 0;
    }
    if (!any) state_[0] = 1;
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

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; one draw per uniform pair keeps the
  // stream layout independent of call history.
  double next_gaussian() {
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform in [0, bound) by 128-bit multiply-shift.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(bound)) >> 64);
  }

  // Fisher-Yates shuffle driven by next_below.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace sgdlab
