#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace gcv {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  return splitmix64(s);
}

/// Seed of a named sub-stream. All randomness in the library flows from one
/// base seed through these; distinct (a, b, c) labels give independent
/// streams, so results do not depend on evaluation order across batches.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
  return mix_seed(mix_seed(mix_seed(base, a), b), c);
}

/// xoshiro256** with splitmix64 seeding. Self-contained so that streams are
/// bit-reproducible across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
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

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard Gaussian via Box-Muller (pairs cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // (0,1] to keep the log finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Uniform direction on the unit sphere of R^n.
  std::vector<double> unit_vector(std::size_t n) {
    std::vector<double> v(n);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& x : v) {
        x = normal();
        norm2 += x * x;
      }
    } while (norm2 == 0.0);
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace gcv
