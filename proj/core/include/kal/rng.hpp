#ifndef KAL_RNG_HPP
#define KAL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include "kal/vec3.hpp"

namespace kal {

/// SplitMix64 step; used to hash seeds and to fill generator state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Collapse (seed, tag...) into one 64-bit stream key. Distinct tag tuples
/// give statistically independent streams regardless of worker scheduling.
inline std::uint64_t derive_stream_key(std::uint64_t seed,
                                       std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = seed;
  (void)splitmix64(h);
  for (std::uint64_t t : tags) {
    h ^= t + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    (void)splitmix64(h);
  }
  return splitmix64(h);
}

/// xoshiro256++ stream with a deterministic, portable draw sequence.
/// Not thread-safe; use one stream per worker.
class RngStream {
 public:
  RngStream() : RngStream(0x6b69745f6b616cULL) {}

  explicit RngStream(std::uint64_t key) {
    std::uint64_t sm = key;
    for (auto& word : state_) word = splitmix64(sm);
  }

  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
      : RngStream(derive_stream_key(seed, tags)) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n). Rejection-free modulo bias is negligible for
  /// the desk-scale ranges used here, but we reject anyway to stay exact.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// Exponential holding time; rate <= 0 maps to +infinity (frozen state).
  double exponential(double rate) {
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return -std::log1p(-uniform()) / rate;
  }

  /// Standard normal via Box-Muller; second variate is cached so the draw
  /// sequence is deterministic and platform-independent.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  Vec3 normal3(double stddev = 1.0) {
    return {stddev * normal(), stddev * normal(), stddev * normal()};
  }

  /// Uniformly distributed direction on the unit sphere.
  Vec3 unit_vector() {
    const double z = 1.0 - 2.0 * uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * M_PI * uniform();
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t state_[4] = {};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Stream tags; realization r uses {tag, r}, estimator streams add more indices.
namespace stream_tag {
inline constexpr std::uint64_t realization = 0x01;
inline constexpr std::uint64_t bbgky_omega = 0x02;
inline constexpr std::uint64_t gamma_check = 0x03;
inline constexpr std::uint64_t init_draw = 0x04;
}  // namespace stream_tag

}  // namespace kal

#endif
