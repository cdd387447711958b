#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace cellplan {

// All randomness in the library goes through the two generators below. Standard
// library distributions are avoided on purpose: their output is not pinned by the
// standard, and every seeded run must be bit-reproducible across platforms.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Stateless counter-based stream: the value depends only on (seed, stream, counter),
/// so work items can be evaluated in any order on any number of threads.
inline std::uint64_t counter_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t key = splitmix64(seed ^ (0xA0761D6478BD642Full * (stream + 1)));
  return splitmix64(key ^ (counter * 0x9E3779B97F4A7C15ull));
}

inline double counter_unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return unit_double(counter_u64(seed, stream, counter));
}

/// Sequential splitmix64 generator for single-threaded consumers (scene synthesis,
/// hill climbing, user population).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  double next_unit() { return unit_double(next_u64()); }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  std::uint64_t next_below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  bool next_bool(double p_true) { return next_unit() < p_true; }

  /// Standard normal via Box-Muller; the pair is consumed in a fixed order.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    const double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Bit-reversed (van der Corput base-2) fraction of the index.
inline double van_der_corput(std::uint64_t i) {
  std::uint64_t r = 0;
  for (int b = 0; b < 64; ++b) {
    r = (r << 1) | (i & 1);
    i >>= 1;
  }
  return static_cast<double>(r) * 0x1.0p-64;
}

/// Azimuth fraction in [0,1) of ray `i`. Stratified mode jitters the bit-reversed
/// low-discrepancy point inside its dyadic birth cell, so the fraction depends only
/// on (seed, i): the first N rays of a 2N-ray launch are exactly the N-ray launch,
/// which makes coverage monotone when num_samples doubles.
inline double ray_azimuth_fraction(std::uint64_t seed, std::uint64_t i, bool stratified) {
  constexpr std::uint64_t kStreamAzimuth = 0x5261795f417a696dull;
  const double u = counter_unit(seed, kStreamAzimuth, i);
  if (!stratified) return u;
  if (i == 0) return u;
  const int generation = std::bit_width(i) - 1;
  const double cell_width = std::ldexp(1.0, -(generation + 1));
  double f = van_der_corput(i) + (u - 0.5) * cell_width;
  f -= std::floor(f);
  return f;
}

}  // namespace cellplan
