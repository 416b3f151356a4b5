#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "wpcn/errors.hpp"

// Self-contained random number generation. Standard-library distributions
// are implementation-defined, so simulation results would differ across
// toolchains; everything here is pinned bit-for-bit by the master seed and
// the derivation path, which is what makes reruns byte-identical.
namespace wpcn::rng {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Child seed for an addressable stream (frame index, entity, purpose).
/// Streams derived from distinct key paths are decorrelated regardless of
/// evaluation order, so chunked or reordered loops reproduce exactly.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = master;
  (void)splitmix64_next(s);
  s ^= a * 0xA24BAED4963EE407ull;
  (void)splitmix64_next(s);
  s ^= b * 0x9FB21C651E98DF25ull;
  (void)splitmix64_next(s);
  s ^= c * 0xD6E8FEB86659FD93ull;
  return splitmix64_next(s);
}

class Xoshiro256ss {
 public:
  explicit Xoshiro256ss(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
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

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in the open interval (0, 1); safe under log and erfinv.
  double uniform_open() {
    return (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential() { return -std::log(uniform_open()); }

  double normal() {
    // Marsaglia polar method; rejection keeps it exact.
    while (true) {
      const double u = 2.0 * uniform01() - 1.0;
      const double v = 2.0 * uniform01() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

  /// Gamma(shape, 1) for shape >= 1 by Marsaglia-Tsang squeeze.
  double gamma(double shape) {
    if (!(shape >= 1.0)) throw domain_error("rng: gamma shape must be >= 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      const double x = normal();
      const double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      const double v = t * t * t;
      const double u = uniform_open();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v;
      }
    }
  }

  /// Poisson(mean) exactly, for any mean >= 0. Large means are split into
  /// independent chunks below the product-method comfort zone; the sum of
  /// independent Poissons is Poisson, so no approximation enters.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0)) throw domain_error("rng: poisson mean must be nonnegative");
    std::uint64_t total = 0;
    int chunks = mean > 10.0 ? static_cast<int>(std::ceil(mean / 10.0)) : 1;
    const double chunk_mean = mean / chunks;
    const double limit = std::exp(-chunk_mean);
    for (int i = 0; i < chunks; ++i) {
      double prod = uniform01();
      while (prod > limit) {
        ++total;
        prod *= uniform01();
      }
    }
    return total;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace wpcn::rng
