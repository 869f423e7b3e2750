#pragma once

#include <cstdint>
#include <random>

namespace pseudopost {

// splitmix64 finalizer; good avalanche, cheap, and stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a base seed and a path of indices
// (e.g. (seed, iteration, unit)).  Every consumer of randomness owns a
// stream keyed by such a path, which is what makes results independent of
// thread count and scheduling order.
inline std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t head, Rest... rest) {
  return derive_seed(mix64(base ^ mix64(head ^ 0x5bf0f3c254e5a4d1ULL)), rest...);
}

// A self-contained random stream.  Distribution objects are constructed per
// call so the stream's state is exactly the engine's state; draws are
// reproducible from the seed alone.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1); never returns 0, safe under log().
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
  }

  // Shape/scale parameterization: mean = shape * scale.
  double gamma(double shape, double scale) {
    std::gamma_distribution<double> dist(shape, scale);
    return dist(engine_);
  }

  double chi_squared(double df) { return gamma(0.5 * df, 2.0); }

  std::int64_t poisson(double mean) {
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(engine_);
  }

  // Uniform integer in [0, bound), bound > 0; rejection keeps it unbiased.
  std::uint64_t uniform_index(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
      const std::uint64_t raw = engine_();
      if (raw < limit) return raw % bound;
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pseudopost
