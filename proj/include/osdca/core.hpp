#ifndef OSDCA_CORE_HPP
#define OSDCA_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace osdca {

/// Dense real coordinate vector. Decision variables and samples use the same type.
using vector = Eigen::VectorXd;
using matrix = Eigen::MatrixXd;
using index_t = Eigen::Index;

/// Read-only view over a batch of samples.
using sample_span = std::span<const vector>;

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class dimension_error : public error {
 public:
  using error::error;
};

/// A solver or subproblem precondition does not hold (invalid schedule,
/// missing oracle, non-convex subproblem, ...).
class precondition_error : public error {
 public:
  using error::error;
};

/// Malformed or missing input data.
class data_error : public error {
 public:
  using error::error;
};

/// Invalid experiment configuration; the message names the offending field.
class config_error : public error {
 public:
  using error::error;
};

/// The eigen oracle cannot identify a unique top direction.
class degenerate_error : public error {
 public:
  using error::error;
};

inline void require_dimension(index_t got, index_t want, const char* what) {
  if (got != want)
    throw dimension_error(std::string(what) + ": dimension " + std::to_string(got) +
                          " does not match " + std::to_string(want));
}

inline bool all_finite(const vector& v) { return v.allFinite(); }

namespace detail {
inline constexpr std::size_t pairwise_block = 8;

template <class Term>
double pairwise_sum_range(std::size_t lo, std::size_t hi, Term& term) {
  if (hi - lo <= pairwise_block) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum_range(lo, mid, term) + pairwise_sum_range(mid, hi, term);
}

template <class Term>
void pairwise_vector_sum_range(std::size_t lo, std::size_t hi, Term& term, vector& out) {
  if (hi - lo <= pairwise_block) {
    out.setZero();
    for (std::size_t i = lo; i < hi; ++i) term(i, out);
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  vector right(out.size());
  pairwise_vector_sum_range(lo, mid, term, out);
  pairwise_vector_sum_range(mid, hi, term, right);
  out += right;
}
}  // namespace detail

/// Pairwise (tree) summation of term(0) + ... + term(n-1). The summation
/// order depends only on n, so results are reproducible.
template <class Term>
double pairwise_sum(std::size_t n, Term term) {
  if (n == 0) return 0.0;
  return detail::pairwise_sum_range(0, n, term);
}

/// Vector version of pairwise_sum. `accumulate(i, acc)` must add the i-th
/// term into `acc`.
template <class Accumulate>
vector pairwise_vector_sum(std::size_t n, index_t dim, Accumulate accumulate) {
  vector out = vector::Zero(dim);
  if (n == 0) return out;
  detail::pairwise_vector_sum_range(0, n, accumulate, out);
  return out;
}

}  // namespace osdca

#endif  // OSDCA_CORE_HPP
