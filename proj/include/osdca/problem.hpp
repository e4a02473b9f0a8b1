#ifndef OSDCA_PROBLEM_HPP
#define OSDCA_PROBLEM_HPP

#include "osdca/core.hpp"
#include "osdca/feasible_set.hpp"

#include <functional>
#include <optional>
#include <string>

namespace osdca {

/// Strong convexity moduli of the DC components: rho(H) and inf_z rho(g(., z)).
/// The stochastic schemes need their sum to be positive.
struct strong_convexity {
  double rho_H = 0.0;
  double rho_g_inf = 0.0;

  double total() const { return rho_H + rho_g_inf; }
};

/// Output of a convex subproblem solver.
struct subproblem_result {
  vector w;
  std::size_t iterations = 0;
  /// Solver-reported accuracy of `w` (projected-gradient mapping norm for the
  /// built-in E-PCA backends; zero for closed forms).
  double residual = 0.0;
  bool converged = true;
};

using sample_function = std::function<double(const vector& w, const vector& z)>;
using sample_vector_function = std::function<vector(const vector& w, const vector& z)>;
using batch_vector_function = std::function<vector(const vector& w, sample_span batch)>;

/// argmin_{w in S} { first(w) - <t, w> }, where "first" is the first DC
/// component averaged over `batch` (or the exact expectation).
using subproblem_solver =
    std::function<subproblem_result(const vector& t, sample_span batch, const vector& warm_start)>;

/// The exact first component G: its value and a solver for
/// argmin_{w in S} G(w) - <t, w>. The batch argument of `solve` is empty.
struct exact_component {
  std::function<double(const vector& w)> value;
  subproblem_solver solve;
};

/// One DC program  min_{w in S} E g(w, Z) - E h(w, Z).
///
/// Per-sample oracles are std::function callbacks. `tau` selects an element of
/// the subdifferential of h(., z) at w. The optional members enable the
/// variants that use exact information (exact_G, exact_dH) or diagnostics
/// (g_subgradient, objective_subgradient).
///
/// The envelope functions bounding |g| and |tau| that the convergence theory
/// relies on are obligations on whoever writes a problem; they are not checked.
template <projectable_set Set>
struct basic_dc_problem {
  basic_dc_problem(std::string name_, Set set, index_t sample_dimension_ = 0)
      : name(std::move(name_)),
        dimension(set.dimension()),
        sample_dimension(sample_dimension_ > 0 ? sample_dimension_ : set.dimension()),
        feasible_set(std::move(set)) {}

  std::string name;
  index_t dimension = 0;
  index_t sample_dimension = 0;
  Set feasible_set;

  sample_function g;
  sample_function h;
  sample_vector_function tau;

  /// tau(w, z) does not depend on z. The batch average is then tau(w, z_1),
  /// evaluated once and exactly.
  bool tau_sample_free = false;
  /// Optional batch-level override for the averaged selector (1/n) sum tau(w, z_i).
  batch_vector_function average_tau;
  /// A subgradient of g(., z) at w. Needed by criticality_residual.
  sample_vector_function g_subgradient;
  /// A subgradient of g(., z) - h(., z) at w. Needed by the PSS baseline.
  sample_vector_function objective_subgradient;

  /// Solver for the sampled (or empirical) first-component subproblem.
  subproblem_solver sampled_subproblem;
  std::optional<exact_component> exact_G;
  std::function<vector(const vector& w)> exact_dH;

  strong_convexity convexity;
  /// Exponent of the Rademacher bound R_k(g) <= N_g / k^alpha for this g.
  double rademacher_alpha = 0.5;
};

using dc_problem = basic_dc_problem<ball>;

/// (1/n) sum_i tau(w, z_i) over the batch, by pairwise summation unless the
/// problem provides its own batch average.
template <projectable_set Set>
vector average_tau(const basic_dc_problem<Set>& problem, const vector& w, sample_span batch) {
  if (batch.empty()) throw error("average_tau: empty batch");
  if (problem.average_tau) {
    vector t = problem.average_tau(w, batch);
    require_dimension(t.size(), problem.dimension, "average_tau");
    return t;
  }
  if (!problem.tau) throw precondition_error("problem has no subgradient selector tau");
  if (problem.tau_sample_free) {
    vector t = problem.tau(w, batch.front());
    require_dimension(t.size(), problem.dimension, "tau");
    return t;
  }
  vector sum = pairwise_vector_sum(batch.size(), problem.dimension, [&](std::size_t i, vector& acc) {
    vector t = problem.tau(w, batch[i]);
    require_dimension(t.size(), problem.dimension, "tau");
    acc += t;
  });
  return sum / static_cast<double>(batch.size());
}

/// (1/N) sum g(w, z_i) - (1/N) sum h(w, z_i).
template <projectable_set Set>
double empirical_objective(const basic_dc_problem<Set>& problem, const vector& w,
                           sample_span samples) {
  if (samples.empty()) throw error("empirical_objective: empty sample set");
  require_dimension(w.size(), problem.dimension, "empirical_objective");
  if (!problem.g || !problem.h) throw precondition_error("problem lacks per-sample g or h values");
  const auto n = static_cast<double>(samples.size());
  const double gs = pairwise_sum(samples.size(), [&](std::size_t i) { return problem.g(w, samples[i]); });
  const double hs = pairwise_sum(samples.size(), [&](std::size_t i) { return problem.h(w, samples[i]); });
  return gs / n - hs / n;
}

/// Empirical criticality diagnostic. The reported vectors are
///   h_side = (1/N) sum tau(w, z_i)
///   g_side = (1/N) sum g_subgradient(w, z_i) + (normal cone element of S at w)
/// with the normal cone element chosen as the projection of their difference,
/// so residual = |h_side - g_side| is the tangential part of the difference.
/// A zero residual means w is a KKT point of the empirical DC program.
struct criticality_report {
  double residual = 0.0;
  vector g_side_vector;
  vector h_side_vector;
};

template <projectable_set Set>
criticality_report criticality_residual(const basic_dc_problem<Set>& problem, const vector& w,
                                        sample_span samples) {
  require_dimension(w.size(), problem.dimension, "criticality_residual");
  if (!problem.g_subgradient)
    throw precondition_error("problem lacks a first-component subgradient");
  if (samples.empty()) throw error("criticality_residual: empty sample set");
  const auto n = static_cast<double>(samples.size());
  vector h_side = average_tau(problem, w, samples);
  vector g_side = pairwise_vector_sum(samples.size(), problem.dimension,
                                      [&](std::size_t i, vector& acc) {
                                        acc += problem.g_subgradient(w, samples[i]);
                                      }) /
                  n;
  const vector diff = h_side - g_side;
  g_side += problem.feasible_set.normal_cone_projection(w, diff);
  criticality_report out;
  out.residual = (h_side - g_side).norm();
  out.g_side_vector = std::move(g_side);
  out.h_side_vector = std::move(h_side);
  return out;
}

}  // namespace osdca

#endif  // OSDCA_PROBLEM_HPP
