#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace eplab {

// splitmix64 finalizer; used to derive independent seeds from (seed, salt).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform on [0, 1) with 53 bits, independent of the standard library's
  // distribution implementations.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi] by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Index drawn from a discrete distribution (weights need not be normalized).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      r -= weights[i];
      if (r < 0.0) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return 0;
  }

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
};

// One episode's randomness, split into named sub-streams so that extra draws
// in one stream never shift another.
struct Streams {
  enum Id : std::uint64_t { kTransition = 1, kObservation = 2, kArrival = 3, kPolicy = 4 };

  explicit Streams(std::uint64_t seed)
      : transition(mix_seed(seed, kTransition)),
        observation(mix_seed(seed, kObservation)),
        arrival(mix_seed(seed, kArrival)),
        policy(mix_seed(seed, kPolicy)) {}

  Rng transition;
  Rng observation;
  Rng arrival;
  Rng policy;
};

// Seed of the i-th episode of a batch run from `base`.
constexpr std::uint64_t episode_seed(std::uint64_t base, std::uint64_t index) {
  return mix_seed(base ^ 0xE9150DEULL, index);
}

}  // namespace eplab
