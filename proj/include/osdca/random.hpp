#ifndef OSDCA_RANDOM_HPP
#define OSDCA_RANDOM_HPP

// Reproducible randomness.
//
// Every random quantity in the library is drawn from std::mt19937_64, whose
// output sequence is fixed by the C++ standard. The distributions below are
// written out by hand instead of using <random>'s distribution classes, which
// are implementation-defined, so a seed gives the same numbers on every
// standard library.
//
// Independent streams are derived from a master seed with split_seed(), a
// SplitMix64 finalizer applied to (seed, tag). Batch draws, shuffles and
// initial points each use their own tag.

#include "osdca/core.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace osdca {

using engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent seed for stream `tag` from `seed`.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

/// Well-known stream tags.
namespace seed_tag {
inline constexpr std::uint64_t shuffle = 1;
inline constexpr std::uint64_t init = 2;
inline constexpr std::uint64_t batches = 3;
inline constexpr std::uint64_t basis = 4;
inline constexpr std::uint64_t validation = 5;
inline constexpr std::uint64_t run = 6;
}  // namespace seed_tag

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer on [0, bound) by rejection, bound > 0.
inline std::uint64_t uniform_below(engine& rng, std::uint64_t bound) {
  const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Standard normal variates by the Marsaglia polar method.
class normal_source {
 public:
  explicit normal_source(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01(rng_) - 1.0;
      v = 2.0 * uniform01(rng_) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  vector draw(index_t dim) {
    vector out(dim);
    for (index_t i = 0; i < dim; ++i) out[i] = (*this)();
    return out;
  }

  engine& raw() { return rng_; }

 private:
  engine rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fisher-Yates permutation of {0, ..., n-1} determined by `seed`.
inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  engine rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

/// Uniform point in the Euclidean ball of radius r centred at the origin:
/// a Gaussian direction scaled by r * U^(1/m).
inline vector uniform_in_ball(index_t dim, double radius, std::uint64_t seed) {
  normal_source normal(seed);
  vector dir = normal.draw(dim);
  double n = dir.norm();
  while (n == 0.0) {
    dir = normal.draw(dim);
    n = dir.norm();
  }
  const double scale = radius * std::pow(uniform01(normal.raw()), 1.0 / static_cast<double>(dim));
  return dir * (scale / n);
}

}  // namespace osdca

#endif  // OSDCA_RANDOM_HPP
