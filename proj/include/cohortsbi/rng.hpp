#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

namespace cohortsbi {

// splitmix64 step; advances `state` and returns a well-mixed 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child-seed derivation. Every parallel unit of work (woman, simulation,
// round, fold) gets a seed derived from the master seed and its index path,
// so results never depend on scheduling or worker count.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a) {
  std::uint64_t s = parent;
  (void)splitmix64(s);
  s ^= a * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL;
  return splitmix64(s);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, Rest... rest) {
  return derive_seed(derive_seed(parent, a), rest...);
}

// Deterministic random stream. The engine is std::mt19937_64 (fully specified
// by the standard); all variate transforms are implemented here rather than
// with std::*_distribution so that sequences are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::domain_error("uniform_index: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = engine_();
    while (x < threshold) x = engine_();
    return x % n;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() {
    double u = 1.0 - uniform();  // (0, 1]
    double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * std::numbers::pi * v);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, rate) by Marsaglia-Tsang squeeze; shape < 1 boosted via the
  // Gamma(shape+1) * U^(1/shape) identity.
  double gamma(double shape, double rate) {
    if (shape <= 0.0 || rate <= 0.0)
      throw std::domain_error("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform();
      while (u <= 0.0) u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
        return d * v / rate;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a, 1.0);
    double y = gamma(b, 1.0);
    double s = x + y;
    if (s <= 0.0) return 0.5;  // unreachable in practice
    return x / s;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cohortsbi
