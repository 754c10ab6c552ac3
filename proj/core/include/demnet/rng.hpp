#ifndef DEMNET_RNG_HPP
#define DEMNET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace demnet {

/// splitmix64 step; used to derive decorrelated child seeds from one
/// master seed without consuming the parent stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic random stream. The engine (mt19937_64) and every
/// bits-to-value conversion below are fixed by this header, so the same
/// seed yields the same sequence on any platform and standard library.
/// std::uniform_real_distribution / std::normal_distribution /
/// std::shuffle are deliberately not used: their outputs are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Consumes engine values in pairs and
  /// caches the second variate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1]: guards log(0).
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * pi_ * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Unit-mean exponential. -log1p(-u) maps u in [0,1) to [0, inf)
  /// without losing precision near zero.
  double exponential() { return -std::log1p(-uniform()); }

  /// Integer in [0, n), n >= 1. Rejection-free modulo of a 64-bit draw
  /// would bias tiny n; use the standard Lemire-style threshold rejection.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  /// In-place Fisher-Yates. Matches the textbook downward loop so the
  /// permutation for a given seed is pinned.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr double pi_ = 3.14159265358979323846;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace demnet

#endif  // DEMNET_RNG_HPP
