#pragma once

// Deterministic counter-derived random streams. Every dataset sample gets an
// independent stream keyed by (seed, stream_id), so generation order and
// worker count cannot change the drawn values. The generator is SplitMix64;
// the float conversions are written out explicitly instead of going through
// <random> distributions, whose output is implementation-defined.

#include <complex>
#include <cstdint>

namespace radarim {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    Rng r(0);
    r.state_ = mix(mix(seed) + 0x9E3779B97F4A7C15ULL * (stream_id + 1));
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + std::int64_t(next_u64() %
                             std::uint64_t(hi - lo + 1));
  }

  double normal();  // standard normal via Box-Muller (second value cached)

  // complex Gaussian with the given std-dev per real component
  std::complex<double> cnormal(double sigma_per_component) {
    const double re = normal() * sigma_per_component;
    const double im = normal() * sigma_per_component;
    return {re, im};
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace radarim
