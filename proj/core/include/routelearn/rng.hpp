#pragma once

#include <cstdint>
#include <initializer_list>

namespace routelearn {

// Splitmix64 step; good enough statistically for simulation use and cheap to
// re-seed, which the substream scheme below does constantly.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// What a draw is for. Keying streams by purpose (not draw order) keeps two
// policies on the same seed exposed to identical noise even when they consume
// different amounts of randomness.
enum class Draw : std::uint64_t {
  kInit = 0,
  kArrivals = 1,
  kTruth = 2,
  kObservation = 3,
  kRecommendation = 4,
  kGeneric = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) { (void)splitmix64(state_); }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [lo, hi]. Modulo bias is negligible for the ranges
  // used here (a few hundred).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t state_;
};

// Independent stream for one (slot, purpose, path) triple under a base seed.
inline Rng substream(std::uint64_t seed, std::uint64_t slot, Draw purpose,
                     std::uint64_t path = 0) {
  std::uint64_t h = seed;
  for (std::uint64_t v : {slot, static_cast<std::uint64_t>(purpose), path}) {
    h ^= splitmix64(h) + v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return Rng(h);
}

}  // namespace routelearn
