#ifndef OSDCA_SCHEDULES_HPP
#define OSDCA_SCHEDULES_HPP

// Sample-size schedules n_k = ceil(c * k^p) and the summability conditions
// that make the stochastic DCA schemes converge:
//
//   full stochastic scheme      sum_k n_k^-beta < inf, beta = min(alpha, 1)
//   exact first component       sum_k n_k^-1    < inf
//   exact subgradients of H     sum_k n_k^-alpha < inf
//
// where alpha is the exponent of a Rademacher bound R_k(g) <= N_g / k^alpha.
// sum_k k^(-p beta) converges iff p * beta > 1.
//
// Besides the Rademacher bound, the theory assumes integrable envelopes
// |g(w, z)| <= g~(z) and |tau(w, z)| <= tau~(z) with tau~^2 integrable.
// Those are properties of the problem definition and are not checked here.

#include "osdca/core.hpp"

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>

namespace osdca {

/// Largest sample count a schedule may produce (doubles represent every
/// integer up to here exactly).
inline constexpr std::uint64_t schedule_limit = std::uint64_t{1} << 53;

class schedule_overflow : public error {
 public:
  using error::error;
};

struct sample_schedule {
  std::uint64_t base = 1;
  double exponent = 2.0;
  /// Clip for finite data. A capped schedule is never certified by validate_schedule.
  std::optional<std::uint64_t> cap;

  static sample_schedule power(double p, std::uint64_t c = 1) { return {c, p, std::nullopt}; }

  /// n_k for k >= 1. Throws schedule_overflow above 2^53.
  std::uint64_t size(std::uint64_t k) const {
    if (k == 0) throw error("sample_schedule: iterations are numbered from 1");
    if (base == 0 || !(exponent > 0.0)) throw error("sample_schedule: base and exponent must be positive");
    std::uint64_t n;
    if (exponent == std::floor(exponent) && exponent <= 64.0) {
      // Exact integer evaluation of c * k^p with overflow detection.
      n = base;
      for (int i = 0; i < static_cast<int>(exponent); ++i) {
        if (n > schedule_limit / k) throw overflow(k);
        n *= k;
      }
      if (n > schedule_limit) throw overflow(k);
    } else {
      const double v = static_cast<double>(base) * std::pow(static_cast<double>(k), exponent);
      if (!(v <= static_cast<double>(schedule_limit))) throw overflow(k);
      n = static_cast<std::uint64_t>(std::ceil(v));
    }
    if (n == 0) n = 1;
    if (cap && n > *cap) n = *cap;
    return n;
  }

  std::string describe() const {
    std::string s = std::to_string(base) + "*k^";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", exponent);
    s += buf;
    if (cap) s += " (cap " + std::to_string(*cap) + ")";
    return s;
  }

 private:
  schedule_overflow overflow(std::uint64_t k) const {
    return schedule_overflow("sample_schedule: n_k exceeds 2^53 at k = " + std::to_string(k));
  }
};

/// Parse the shorthand "k<p>" or "<c>k<p>" (e.g. "k2", "k1.5", "4k3").
inline std::optional<sample_schedule> parse_schedule(const std::string& text) {
  const auto pos = text.find('k');
  if (pos == std::string::npos || pos + 1 >= text.size()) return std::nullopt;
  std::uint64_t base = 1;
  if (pos > 0) {
    char* end = nullptr;
    const unsigned long long b = std::strtoull(text.c_str(), &end, 10);
    if (end != text.c_str() + pos || b == 0) return std::nullopt;
    base = b;
  }
  char* end = nullptr;
  const double p = std::strtod(text.c_str() + pos + 1, &end);
  if (end != text.c_str() + text.size() || !(p > 0.0) || !std::isfinite(p)) return std::nullopt;
  return sample_schedule::power(p, base);
}

enum class schedule_validity {
  valid,
  /// sum n_k^-beta diverges (p * beta <= 1).
  divergent,
  /// The schedule is capped; the convergence theory does not apply.
  finite_data,
};

inline const char* to_string(schedule_validity v) {
  switch (v) {
    case schedule_validity::valid: return "valid";
    case schedule_validity::divergent: return "invalid (divergent series)";
    case schedule_validity::finite_data: return "invalid (finite-data cap)";
  }
  return "?";
}

inline schedule_validity validate_schedule(const sample_schedule& schedule, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw error("validate_schedule: beta must lie in (0, 1]");
  if (schedule.cap) return schedule_validity::finite_data;
  return schedule.exponent * beta > 1.0 ? schedule_validity::valid : schedule_validity::divergent;
}

/// Certificate R_k(g, Xi) <= N_g / k^alpha.
struct rademacher_bound {
  double N_g = 0.0;
  double alpha = 0.0;
  /// Set when alpha is so small that no practical schedule satisfies the
  /// summability condition (p would have to exceed 1 / alpha > 10).
  bool impractical = false;
};

inline constexpr double impractical_alpha = 0.1;

/// g(., z) bounded by M and (L, gamma)-Hoelder in w on a cube of side D in R^m.
/// Any alpha in (0, 1/2) is admissible.
inline rademacher_bound rademacher_holder_in_w(double M, double L, double gamma, double D,
                                               index_t m, double alpha) {
  if (!(alpha > 0.0)) throw error("rademacher_holder_in_w: alpha must be positive");
  if (alpha >= 0.5) throw error("rademacher_holder_in_w: alpha must be < 1/2");
  if (!(M > 0.0) || L < 0.0 || !(D > 0.0) || m < 1 || !(gamma > 0.0 && gamma <= 1.0))
    throw error("rademacher_holder_in_w: parameter out of range");
  const double md = static_cast<double>(m);
  const double N = L * std::pow(D, gamma) * std::pow(md, gamma / 2.0) +
                   M * std::sqrt(md) / std::sqrt(gamma * (1.0 - 2.0 * alpha) * std::exp(1.0));
  return {N, alpha, alpha < impractical_alpha};
}

/// g(w, .) bounded by M and (L, gamma)-Hoelder in z on a compact support in a
/// cube of side D in R^n.
inline rademacher_bound rademacher_holder_in_z(double M, double L, double gamma, double D,
                                               index_t n) {
  if (!(M > 0.0) || L < 0.0 || !(gamma > 0.0) || !(D > 0.0) || n < 1)
    throw error("rademacher_holder_in_z: parameter out of range");
  const double nd = static_cast<double>(n);
  const double N = M + L * std::pow(D, gamma) * std::pow(nd, gamma / 2.0);
  const double alpha = gamma / (2.0 * gamma + nd);
  return {N, alpha, alpha < impractical_alpha};
}

/// |g| <= M on a finite support of N_Xi points: R_k <= M sqrt(N_Xi / k).
inline double rademacher_discrete(double M, std::uint64_t N_Xi, std::uint64_t k) {
  if (!(M > 0.0) || N_Xi == 0 || k == 0) throw error("rademacher_discrete: parameters must be positive");
  return M * std::sqrt(static_cast<double>(N_Xi) / static_cast<double>(k));
}

inline rademacher_bound rademacher_discrete_bound(double M, std::uint64_t N_Xi) {
  return {rademacher_discrete(M, N_Xi, 1), 0.5, false};
}

}  // namespace osdca

#endif  // OSDCA_SCHEDULES_HPP
