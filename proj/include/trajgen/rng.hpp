#ifndef TRAJGEN_RNG_HPP_
#define TRAJGEN_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace trajgen {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** seeded through splitmix64. All sampling helpers are written
/// out here (no std distributions) so streams agree across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr const char* kAlgorithm = "xoshiro256**";

  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  /// Independent stream keyed by (seed, a, b); used for per-window, per-sample draws.
  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t sm = seed;
    std::uint64_t key = splitmix64(sm);
    sm = key ^ (a * 0xd1342543de82ef95ULL);
    key = splitmix64(sm);
    sm = key ^ (b * 0xaf251af3b0f025b5ULL + 0x632be59bd9b4e019ULL);
    return Rng(splitmix64(sm));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
};

}  // namespace trajgen

#endif  // TRAJGEN_RNG_HPP_
