#pragma once

#include <cmath>
#include <cstdint>

namespace rendersynth {

/// Deterministic splitmix64 generator. Unlike the <random> distributions its
/// output is pinned by this code alone, so seeds reproduce bit-identically
/// across platforms, and independent per-sample streams are cheap to derive.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Two uniforms per draw, no caching, so the
  /// stream position is a pure function of the number of calls.
  double normal() {
    // (0, 1] so the log never sees zero
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Zero-mean normal redrawn until |value| <= bound.
  double truncated_normal(double sigma, double bound) {
    double v = normal(0.0, sigma);
    while (std::abs(v) > bound) v = normal(0.0, sigma);
    return v;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    return n == 0 ? 0 : next_u64() % n;
  }

  /// Knuth sampler; fine for the small lambdas used here.
  int poisson(double lambda) {
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

  /// Seed of the independent stream for sample `index`. Any single sample of
  /// a dataset can be regenerated in isolation from (base seed, index).
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Generator for the derived stream of sample `index`.
  Rng child(std::uint64_t index) const { return Rng(derive_seed(state_, index)); }

 private:
  std::uint64_t state_;
};

}  // namespace rendersynth
