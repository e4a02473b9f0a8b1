#ifndef OSDCA_EPCA_HPP
#define OSDCA_EPCA_HPP

// Expected PCA:  min_{|w| <= 1}  -1/2 E <w, Z>^2.
//
// Decomposition 1:  g = (lambda/2)|w|^2,             h = (lambda/2)|w|^2 + 1/2 <w,z>^2
// Decomposition 2:  g = (L/2)|w|^2 - 1/2 <w,z>^2,     h = (L/2)|w|^2 + 1/2 <w,z>^2
//
// In both cases the averaged subgradient of h is  c w + (1/n) sum <w,z_i> z_i
// with c = lambda or L. Decomposition 2 sums to -E <w,Z>^2, twice the
// objective, with the same minimizers; suboptimality is always reported on
// -1/2 E <w,Z>^2. Decomposition 1 has the closed-form subproblem
// solution below; decomposition 2 needs an inner convex solve.

#include "osdca/core.hpp"
#include "osdca/feasible_set.hpp"
#include "osdca/problem.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>

namespace osdca::epca {

struct decomposition1 {
  double lambda = 1.0;
};

enum class subproblem_backend { inner_dca, projected_gradient };

inline const char* to_string(subproblem_backend b) {
  return b == subproblem_backend::inner_dca ? "inner-dca" : "projected-gradient";
}

inline std::optional<subproblem_backend> parse_backend(std::string_view s) {
  if (s == "inner-dca") return subproblem_backend::inner_dca;
  if (s == "projected-gradient") return subproblem_backend::projected_gradient;
  return std::nullopt;
}

struct decomposition2 {
  double L = 1.0;
  double inner_tolerance = 1e-5;
  std::size_t inner_max_iters = 200;
  subproblem_backend backend = subproblem_backend::inner_dca;
};

/// (1/n) sum <w, z_i> z_i, matrix-free.
inline vector batch_moment_apply(const vector& w, sample_span batch) {
  if (batch.empty()) throw error("epca: empty batch");
  const index_t m = w.size();
  vector sum = pairwise_vector_sum(batch.size(), m, [&](std::size_t i, vector& acc) {
    const vector& z = batch[i];
    require_dimension(z.size(), m, "epca sample");
    acc += w.dot(z) * z;
  });
  return sum / static_cast<double>(batch.size());
}

/// t = weight * w + (1/n) sum <w, z_i> z_i. With weight = lambda this is the
/// decomposition-1 subgradient estimate, with weight = L the decomposition-2 one.
inline vector averaged_h_subgradient(const vector& w, sample_span batch, double weight) {
  return weight * w + batch_moment_apply(w, batch);
}

/// argmin_{|w| <= 1} (lambda/2)|w|^2 - <t, w>:  t / lambda if |t| <= lambda,
/// t / |t| otherwise. lambda = 0 gives t / |t| (or 0 when t = 0).
inline vector regularized_ball_argmin(const vector& t, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw error("epca: lambda must be finite and nonnegative");
  const double n = t.norm();
  if (n == 0.0) return vector::Zero(t.size());
  if (n <= lambda) return t / lambda;
  vector w = t / n;
  const double wn = w.norm();
  if (wn > 1.0) w /= wn;
  return w;
}

/// (L/2)|w|^2 - 1/(2n) sum <w, z_i>^2 - <t, w>; the quadratic sample term is
/// dropped for an empty batch.
inline double subproblem_objective(const vector& w, const vector& t, sample_span batch, double L) {
  double quad = 0.0;
  if (!batch.empty()) {
    quad = pairwise_sum(batch.size(), [&](std::size_t i) {
             const double a = w.dot(batch[i]);
             return a * a;
           }) /
           static_cast<double>(batch.size());
  }
  return 0.5 * L * w.squaredNorm() - 0.5 * quad - t.dot(w);
}

namespace detail {

// One step of the inner map: closed-form minimizer of the majorant at u.
inline vector inner_step(const vector& u, const vector& t, sample_span batch, double L) {
  return regularized_ball_argmin(batch_moment_apply(u, batch) + t, L);
}

// L |u - P(u - grad/L)|, zero exactly at the subproblem minimizer.
inline double gradient_mapping(const vector& u, const vector& t, sample_span batch, double L) {
  return L * (u - inner_step(u, t, batch, L)).norm();
}

inline subproblem_result solve_inner_dca(const vector& t, sample_span batch, const decomposition2& d,
                                         const vector& u0) {
  subproblem_result r;
  vector u = u0;
  r.converged = false;
  for (std::size_t l = 1; l <= d.inner_max_iters; ++l) {
    vector next = inner_step(u, t, batch, d.L);
    const double step = (next - u).norm();
    u = std::move(next);
    r.iterations = l;
    if (step < d.inner_tolerance) {
      r.converged = true;
      break;
    }
  }
  r.residual = gradient_mapping(u, t, batch, d.L);
  r.w = std::move(u);
  return r;
}

// Accelerated projected gradient (FISTA) with step 1/L and adaptive restart.
// Same stopping rule as the inner DCA; returns the best iterate seen.
inline subproblem_result solve_projected_gradient(const vector& t, sample_span batch, const decomposition2& d,
                                                  const vector& u0) {
  subproblem_result r;
  r.converged = false;
  vector x = u0;
  vector y = u0;
  double theta = 1.0;
  vector best = u0;
  double best_value = subproblem_objective(u0, t, batch, d.L);
  for (std::size_t l = 1; l <= d.inner_max_iters; ++l) {
    vector next = inner_step(y, t, batch, d.L);
    const double step = (next - x).norm();
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    // Restart when the momentum direction opposes the gradient-mapping step.
    if ((y - next).dot(next - x) > 0.0) {
      theta = 1.0;
      y = next;
    } else {
      y = next + ((theta - 1.0) / theta_next) * (next - x);
      theta = theta_next;
    }
    x = std::move(next);
    r.iterations = l;
    const double value = subproblem_objective(x, t, batch, d.L);
    if (value <= best_value) {
      best_value = value;
      best = x;
    }
    if (step < d.inner_tolerance) {
      r.converged = true;
      break;
    }
  }
  r.residual = gradient_mapping(best, t, batch, d.L);
  r.w = std::move(best);
  return r;
}

}  // namespace detail

/// Solve  min_{|w| <= 1} (L/2)|w|^2 - 1/(2n) sum <w, z_i>^2 - <t, w>  from u0.
/// Throws when L < max |z_i|^2 (the subproblem would be nonconvex). An empty
/// batch reduces to regularized_ball_argmin(t, L). Non-convergence within
/// inner_max_iters is reported through `converged`, not thrown.
inline subproblem_result solve_batch_subproblem(const vector& t, sample_span batch, const decomposition2& d,
                                                const vector& u0) {
  if (!(d.L > 0.0)) throw error("epca: L must be positive");
  if (!(d.inner_tolerance > 0.0) || d.inner_max_iters == 0) throw error("epca: invalid inner solver settings");
  require_dimension(u0.size(), t.size(), "subproblem start");
  if (batch.empty()) return {regularized_ball_argmin(t, d.L), 0, 0.0, true};
  double zmax = 0.0;
  for (const vector& z : batch) zmax = std::max(zmax, z.squaredNorm());
  if (zmax > d.L * (1.0 + 1e-12)) {
    throw precondition_error("epca: L = " + std::to_string(d.L) + " is below max |z|^2 = " + std::to_string(zmax) +
                             "; the subproblem is not convex");
  }
  if (u0.norm() > 1.0 + 1e-10) throw precondition_error("epca: subproblem start outside the unit ball");
  return d.backend == subproblem_backend::inner_dca ? detail::solve_inner_dca(t, batch, d, u0)
                                                    : detail::solve_projected_gradient(t, batch, d, u0);
}

/// Empirical E-PCA objective -1/2 (1/N) sum <w, z_i>^2.
inline double objective(const vector& w, sample_span samples) {
  if (samples.empty()) throw error("epca: empty sample set");
  const double s = pairwise_sum(samples.size(), [&](std::size_t i) {
    const double a = w.dot(samples[i]);
    return a * a;
  });
  return -0.5 * s / static_cast<double>(samples.size());
}

/// M = (1/N) sum z_i z_i^T.
inline matrix second_moment(sample_span samples) {
  if (samples.empty()) throw error("epca: empty sample set");
  const index_t m = samples.front().size();
  matrix x(static_cast<index_t>(samples.size()), m);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_dimension(samples[i].size(), m, "second_moment");
    x.row(static_cast<index_t>(i)) = samples[i].transpose();
  }
  matrix out = (x.transpose() * x) / static_cast<double>(samples.size());
  return out;
}

/// Objective evaluated through a precomputed second-moment matrix:
/// F(w) = -1/2 w^T M w. Equal to `objective` up to rounding, O(m^2) per call.
class moment_objective {
 public:
  explicit moment_objective(sample_span samples) : moment_(second_moment(samples)) {}
  explicit moment_objective(matrix moment) : moment_(std::move(moment)) {}

  double operator()(const vector& w) const {
    require_dimension(w.size(), moment_.rows(), "moment_objective");
    return -0.5 * w.dot(moment_ * w);
  }
  const matrix& moment() const { return moment_; }

 private:
  matrix moment_;
};

struct eigen_result {
  vector v;
  double eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
  /// Spectral gap below 1e-9: the top eigenvector is not identifiable.
  bool degenerate = false;
  std::size_t iterations = 0;
  /// False when power iteration hit its cap and v came from the dense solver.
  bool power_converged = true;

  double F_star() const { return -0.5 * eigenvalue; }
};

inline constexpr double degenerate_gap = 1e-9;

/// Top eigenvector of M = (1/N) sum z_i z_i^T by power iteration. The start
/// is the column of M with the largest diagonal entry; iteration stops when
/// successive unit iterates differ by less than 1e-12. The eigenvalue is the
/// Rayleigh quotient; the gap comes from a dense symmetric eigensolver.
/// v is signed so that its largest-magnitude coordinate is positive.
inline eigen_result top_eigenvector(const matrix& moment, std::size_t max_iterations = 1000000) {
  const index_t m = moment.rows();
  if (m == 0 || moment.cols() != m) throw error("top_eigenvector: need a nonempty square matrix");
  eigen_result out;
  Eigen::SelfAdjointEigenSolver<matrix> dense(moment);
  const vector& values = dense.eigenvalues();
  out.second_eigenvalue = m > 1 ? values(m - 2) : 0.0;
  out.degenerate = m > 1 && values(m - 1) - values(m - 2) < degenerate_gap;

  index_t start = 0;
  moment.diagonal().maxCoeff(&start);
  vector v = moment.col(start);
  if (v.norm() == 0.0) {
    // Zero matrix: every unit vector is an eigenvector.
    out.v = vector::Unit(m, 0);
    out.degenerate = m > 1;
    return out;
  }
  v.normalize();
  out.power_converged = false;
  for (std::size_t k = 1; k <= max_iterations; ++k) {
    vector next = moment * v;
    next.normalize();
    const double change = (next - v).norm();
    v = std::move(next);
    out.iterations = k;
    if (change < 1e-12) {
      out.power_converged = true;
      break;
    }
  }
  if (!out.power_converged) v = dense.eigenvectors().col(m - 1);
  index_t big = 0;
  v.cwiseAbs().maxCoeff(&big);
  if (v(big) < 0.0) v = -v;
  out.eigenvalue = v.dot(moment * v);
  out.v = std::move(v);
  return out;
}

inline eigen_result top_eigenvector(sample_span samples) { return top_eigenvector(second_moment(samples)); }

namespace detail {
inline void fill_common(dc_problem& p) {
  p.objective_subgradient = [](const vector& w, const vector& z) -> vector { return -w.dot(z) * z; };
}
}  // namespace detail

/// DC problem for decomposition 1 over the unit ball of R^dim. The first
/// component does not depend on z, so the sampled and exact subproblems
/// coincide and the sampled-G error term vanishes (alpha = 1). lambda = 0 is
/// accepted for ablations but fails the strong-convexity precondition.
inline dc_problem make_problem(const decomposition1& d, index_t dim) {
  if (dim < 1) throw error("epca: dimension must be positive");
  if (!(d.lambda >= 0.0) || !std::isfinite(d.lambda)) throw error("epca: lambda must be finite and nonnegative");
  const double lambda = d.lambda;
  dc_problem p("epca-decomposition-1", ball::unit(dim));
  detail::fill_common(p);
  p.g = [lambda](const vector& w, const vector&) { return 0.5 * lambda * w.squaredNorm(); };
  p.h = [lambda](const vector& w, const vector& z) {
    const double a = w.dot(z);
    return 0.5 * lambda * w.squaredNorm() + 0.5 * a * a;
  };
  p.tau = [lambda](const vector& w, const vector& z) -> vector { return lambda * w + w.dot(z) * z; };
  p.average_tau = [lambda](const vector& w, sample_span batch) { return averaged_h_subgradient(w, batch, lambda); };
  p.g_subgradient = [lambda](const vector& w, const vector&) -> vector { return lambda * w; };
  auto closed = [lambda](const vector& t, sample_span, const vector&) {
    return subproblem_result{regularized_ball_argmin(t, lambda), 0, 0.0, true};
  };
  p.sampled_subproblem = closed;
  p.exact_G = exact_component{[lambda](const vector& w) { return 0.5 * lambda * w.squaredNorm(); }, closed};
  // H is lambda-strongly convex (plus a convex quadratic); so is every g.
  p.convexity = {lambda, lambda};
  p.rademacher_alpha = 1.0;
  return p;
}

/// DC problem for decomposition 2 over the unit ball of R^dim. G is unknown,
/// so only the sampled subproblem is available. g(., z) is Lipschitz and
/// bounded on the ball for |z| = 1, so any alpha < 1/2 is admissible; 0.45 is used.
inline dc_problem make_problem(const decomposition2& d, index_t dim) {
  if (dim < 1) throw error("epca: dimension must be positive");
  if (!(d.L > 0.0) || !std::isfinite(d.L)) throw error("epca: L must be positive and finite");
  const double L = d.L;
  dc_problem p("epca-decomposition-2", ball::unit(dim));
  detail::fill_common(p);
  p.g = [L](const vector& w, const vector& z) {
    const double a = w.dot(z);
    return 0.5 * L * w.squaredNorm() - 0.5 * a * a;
  };
  p.h = [L](const vector& w, const vector& z) {
    const double a = w.dot(z);
    return 0.5 * L * w.squaredNorm() + 0.5 * a * a;
  };
  p.tau = [L](const vector& w, const vector& z) -> vector { return L * w + w.dot(z) * z; };
  p.average_tau = [L](const vector& w, sample_span batch) { return averaged_h_subgradient(w, batch, L); };
  p.g_subgradient = [L](const vector& w, const vector& z) -> vector { return L * w - w.dot(z) * z; };
  p.sampled_subproblem = [d](const vector& t, sample_span batch, const vector& warm) {
    return solve_batch_subproblem(t, batch, d, warm);
  };
  // rho(H) >= L; rho(g(., z)) = L - |z|^2 vanishes for unit samples.
  p.convexity = {L, 0.0};
  p.rademacher_alpha = 0.45;
  return p;
}

/// Attach an exact subgradient of H computed from a finite support: the same
/// averaged selector as the sampled path, over all of `support`. On
/// decomposition 1 this makes the exact-dH scheme reproduce deterministic DCA
/// on `support` bit for bit. `support` must outlive the problem.
inline void attach_exact_dh(dc_problem& p, sample_span support, double weight) {
  if (support.empty()) throw error("epca: empty support for the exact subgradient");
  p.exact_dH = [support, weight](const vector& w) { return averaged_h_subgradient(w, support, weight); };
}

/// Attach an exact subgradient of H from a known second-moment matrix:
/// weight * w + M w.
inline void attach_exact_dh(dc_problem& p, matrix moment, double weight) {
  require_dimension(moment.rows(), p.dimension, "exact second moment");
  auto shared = std::make_shared<const matrix>(std::move(moment));
  p.exact_dH = [shared, weight](const vector& w) -> vector { return weight * w + (*shared) * w; };
}

}  // namespace osdca::epca

#endif  // OSDCA_EPCA_HPP
