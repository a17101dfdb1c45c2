#pragma once

#include <cstdint>
#include <random>

namespace storex {

// Seeded generator with platform-independent draws. The std distributions
// are implementation-defined, so uniform/normal/int sampling is done here on
// top of the raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  uint64_t uniform_index(uint64_t n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Independent child stream keyed by `stream`; same (parent seed, stream)
  /// always yields the same child regardless of draw order elsewhere.
  Rng split(uint64_t stream) const;

  uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  uint64_t seed_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used to derive well-separated stream seeds.
uint64_t mix_seed(uint64_t x);

}  // namespace storex
