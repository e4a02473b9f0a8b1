#ifndef OSDCA_SOLVERS_HPP
#define OSDCA_SOLVERS_HPP

// Iterative schemes over a DC program min_{w in S} G(w) - H(w):
//
//   dca              deterministic DCA on a finite sample (the empirical program)
//   osdca-full       online stochastic DCA: t^k = mean tau(w^k, Z_k,i) over n_k
//                    fresh samples, w^{k+1} = argmin_S (sampled G) - <t^k, .>
//   osdca-exact-g    as above, with the exact G in the subproblem
//   osdca-exact-dh   as above, with t^k an exact subgradient of H
//   pss-constant     projected stochastic subgradient, constant step
//   pss-diminishing  projected stochastic subgradient, step c / k
//
// Stochastic runs stop when the stream is exhausted, the sample budget is
// spent, or max_iterations is reached. When fewer than n_k samples remain the
// final batch is the remainder.

#include "osdca/core.hpp"
#include "osdca/data.hpp"
#include "osdca/problem.hpp"
#include "osdca/random.hpp"
#include "osdca/schedules.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace osdca {

enum class solver_variant { dca, osdca_full, osdca_exact_g, osdca_exact_dh, pss_constant, pss_diminishing };

inline const char* to_string(solver_variant v) {
  switch (v) {
    case solver_variant::dca: return "dca";
    case solver_variant::osdca_full: return "osdca-full";
    case solver_variant::osdca_exact_g: return "osdca-exact-g";
    case solver_variant::osdca_exact_dh: return "osdca-exact-dh";
    case solver_variant::pss_constant: return "pss-constant";
    case solver_variant::pss_diminishing: return "pss-diminishing";
  }
  return "?";
}

inline std::optional<solver_variant> parse_solver_variant(std::string_view s) {
  for (auto v : {solver_variant::dca, solver_variant::osdca_full, solver_variant::osdca_exact_g,
                 solver_variant::osdca_exact_dh, solver_variant::pss_constant, solver_variant::pss_diminishing})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

inline bool is_stochastic(solver_variant v) { return v != solver_variant::dca; }
inline bool is_pss(solver_variant v) {
  return v == solver_variant::pss_constant || v == solver_variant::pss_diminishing;
}

/// Each variant reads only the fields it needs.
struct solver_config {
  solver_variant variant = solver_variant::osdca_exact_g;
  sample_schedule schedule = sample_schedule::power(2.0);
  /// pss-constant step.
  double stepsize = 0.005;
  /// pss-diminishing step c / k.
  double stepsize_c = 8.0;
  std::size_t max_iterations = std::numeric_limits<std::size_t>::max();
  /// Iterate-displacement threshold; deterministic DCA only.
  double stop_tolerance = 1e-8;
  /// Stop once this many samples are consumed (0: unlimited).
  std::size_t max_samples = 0;
  std::uint64_t seed = 0;
  /// Run despite a failed precondition (invalid schedule, no strong
  /// convexity). The violation is recorded as a trace warning.
  bool override_preconditions = false;
};

enum class termination { budget_exhausted, data_exhausted, displacement_below_tolerance, max_iterations };

inline const char* to_string(termination t) {
  switch (t) {
    case termination::budget_exhausted: return "budget-exhausted";
    case termination::data_exhausted: return "data-exhausted";
    case termination::displacement_below_tolerance: return "displacement-below-tolerance";
    case termination::max_iterations: return "max-iterations";
  }
  return "?";
}

struct trace_record {
  std::size_t iteration = 0;
  vector w;
  std::size_t batch_size = 0;
  std::size_t samples_consumed = 0;
  /// Set on evaluation iterations only.
  std::optional<double> objective;
  /// Cumulative solver time, excluding objective evaluation.
  std::int64_t wall_clock_ns = 0;
  double displacement = 0.0;
};

struct run_trace {
  solver_variant variant = solver_variant::dca;
  std::string sampling_mode;
  vector initial;
  std::optional<double> initial_objective;
  std::vector<trace_record> records;
  vector final_w;
  termination reason = termination::max_iterations;
  std::vector<std::string> warnings;
  /// The last batch held fewer than n_k samples.
  bool truncated_final_batch = false;
  std::size_t subproblem_iterations = 0;
  std::size_t subproblem_failures = 0;
  double max_subproblem_residual = 0.0;

  std::size_t samples_consumed() const { return records.empty() ? 0 : records.back().samples_consumed; }
};

/// Objective evaluation hook, e.g. the validation-set objective. Called with
/// the iterate and the number of samples consumed so far.
struct evaluation {
  std::function<double(const vector& w, std::size_t samples_consumed)> objective;
  /// Evaluate every `cadence` iterations and always at the last one.
  std::size_t cadence = 1;

  bool enabled() const { return static_cast<bool>(objective); }
};

/// Default initial point: uniform on the ball.
inline vector default_initial_point(const ball& set, std::uint64_t seed) {
  return set.center() + uniform_in_ball(set.dimension(), set.radius(), seed);
}

namespace detail {

using clock = std::chrono::steady_clock;

inline std::int64_t elapsed_ns(clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - since).count();
}

template <projectable_set Set>
void check_start(const basic_dc_problem<Set>& problem, const vector& w0) {
  require_dimension(w0.size(), problem.dimension, "initial point");
  if (!w0.allFinite()) throw precondition_error("initial point is not finite");
  if (!problem.feasible_set.contains(w0)) throw precondition_error("initial point is not feasible");
}

inline void precondition(bool ok, const std::string& what, const solver_config& config, run_trace& trace) {
  if (ok) return;
  if (!config.override_preconditions) throw precondition_error(what);
  trace.warnings.push_back("precondition overridden: " + what);
}

inline void note_subproblem(const subproblem_result& r, run_trace& trace) {
  trace.subproblem_iterations += r.iterations;
  if (!r.converged) ++trace.subproblem_failures;
  trace.max_subproblem_residual = std::max(trace.max_subproblem_residual, r.residual);
}

inline void finish_evaluations(run_trace& trace, const evaluation& eval) {
  if (!eval.enabled() || trace.records.empty()) return;
  auto& last = trace.records.back();
  if (!last.objective) last.objective = eval.objective(last.w, last.samples_consumed);
}

inline double required_beta(solver_variant v, double alpha) {
  switch (v) {
    case solver_variant::osdca_full: return std::min(alpha, 1.0);
    case solver_variant::osdca_exact_g: return 1.0;
    case solver_variant::osdca_exact_dh: return std::min(alpha, 1.0);
    default: return 1.0;
  }
}

}  // namespace detail

/// Check the schedule against the summability condition of `variant`.
template <projectable_set Set>
schedule_validity check_schedule(const basic_dc_problem<Set>& problem, const solver_config& config) {
  return validate_schedule(config.schedule, detail::required_beta(config.variant, problem.rademacher_alpha));
}

/// Deterministic DCA on the empirical program over `data`:
///   y^k = (1/N) sum tau(x^k, z_i),  x^{k+1} = argmin_S (1/N) sum g(., z_i) - <y^k, .>
/// until |x^{k+1} - x^k| < stop_tolerance or max_iterations.
template <projectable_set Set>
run_trace run_dca(const basic_dc_problem<Set>& problem, const vector& w0, const solver_config& config,
                  sample_span data, const evaluation& eval = {}) {
  if (!problem.sampled_subproblem) throw precondition_error("dca: problem has no subproblem solver");
  if (data.empty()) throw precondition_error("dca: empty data");
  detail::check_start(problem, w0);
  run_trace trace;
  trace.variant = solver_variant::dca;
  trace.sampling_mode = "deterministic";
  trace.initial = w0;
  if (eval.enabled()) trace.initial_objective = eval.objective(w0, 0);

  vector w = w0;
  std::int64_t elapsed = 0;
  trace.reason = termination::max_iterations;
  for (std::size_t k = 1; k <= config.max_iterations; ++k) {
    const auto start = detail::clock::now();
    const vector y = average_tau(problem, w, data);
    subproblem_result r = problem.sampled_subproblem(y, data, w);
    elapsed += detail::elapsed_ns(start);
    detail::note_subproblem(r, trace);
    const double disp = (r.w - w).norm();
    w = std::move(r.w);
    trace_record rec{k, w, 0, 0, std::nullopt, elapsed, disp};
    const bool stop = disp < config.stop_tolerance;
    if (eval.enabled() && (k % eval.cadence == 0 || stop)) rec.objective = eval.objective(w, 0);
    trace.records.push_back(std::move(rec));
    if (stop) {
      trace.reason = termination::displacement_below_tolerance;
      break;
    }
  }
  detail::finish_evaluations(trace, eval);
  trace.final_w = w;
  return trace;
}

namespace detail {

/// Shared loop of the three online stochastic schemes.
template <projectable_set Set>
run_trace run_osdca(const basic_dc_problem<Set>& problem, const vector& w0, const solver_config& config,
                    sample_source& stream, const evaluation& eval) {
  const solver_variant v = config.variant;
  run_trace trace;
  trace.variant = v;
  trace.sampling_mode = stream.mode();

  if (v == solver_variant::osdca_exact_g && !problem.exact_G)
    throw precondition_error("osdca-exact-g: problem has no exact first component");
  if (v == solver_variant::osdca_exact_dh && !problem.exact_dH)
    throw precondition_error("osdca-exact-dh: problem has no exact subgradient of H");
  if (v != solver_variant::osdca_exact_g && !problem.sampled_subproblem)
    throw precondition_error(std::string(to_string(v)) + ": problem has no sampled subproblem solver");
  check_start(problem, w0);

  const double beta = required_beta(v, problem.rademacher_alpha);
  const schedule_validity validity = validate_schedule(config.schedule, beta);
  if (validity == schedule_validity::finite_data) {
    trace.warnings.push_back("finite-data schedule " + config.schedule.describe() +
                             ": convergence theory does not apply");
  } else {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "schedule %s: sum_k n_k^-beta diverges for beta = %g (need p * beta > 1)",
                  config.schedule.describe().c_str(), beta);
    precondition(validity == schedule_validity::valid, buf, config, trace);
  }
  precondition(problem.convexity.total() > 0.0,
               "strong convexity moduli sum to zero (rho_H + inf rho(g) must be positive)", config, trace);

  trace.initial = w0;
  if (eval.enabled()) trace.initial_objective = eval.objective(w0, stream.consumed());

  vector w = w0;
  std::int64_t elapsed = 0;
  std::size_t consumed = 0;
  trace.reason = termination::max_iterations;
  for (std::uint64_t k = 1;; ++k) {
    if (k > config.max_iterations) {
      trace.reason = termination::max_iterations;
      break;
    }
    if (config.max_samples != 0 && consumed >= config.max_samples) {
      trace.reason = termination::budget_exhausted;
      break;
    }
    std::size_t want = config.schedule.size(k);
    if (config.max_samples != 0) want = std::min<std::size_t>(want, config.max_samples - consumed);

    const auto start = clock::now();
    const sample_span batch = stream.take(want);
    if (batch.empty()) {
      trace.reason = termination::data_exhausted;
      break;
    }
    const vector t = v == solver_variant::osdca_exact_dh ? problem.exact_dH(w) : average_tau(problem, w, batch);
    require_dimension(t.size(), problem.dimension, "subgradient estimate");
    subproblem_result r = v == solver_variant::osdca_exact_g ? problem.exact_G->solve(t, sample_span{}, w)
                                                             : problem.sampled_subproblem(t, batch, w);
    elapsed += elapsed_ns(start);
    note_subproblem(r, trace);

    consumed += batch.size();
    const double disp = (r.w - w).norm();
    w = std::move(r.w);
    trace_record rec{static_cast<std::size_t>(k), w, batch.size(), consumed, std::nullopt, elapsed, disp};
    const bool truncated = batch.size() < want;
    if (eval.enabled() && (k % eval.cadence == 0 || truncated)) rec.objective = eval.objective(w, consumed);
    trace.records.push_back(std::move(rec));
    if (truncated) {
      trace.truncated_final_batch = true;
      trace.reason = termination::data_exhausted;
      break;
    }
  }
  finish_evaluations(trace, eval);
  trace.final_w = w;
  return trace;
}

}  // namespace detail

/// Online stochastic DCA with sampled G and sampled subgradients of H.
template <projectable_set Set>
run_trace run_osdca_full(const basic_dc_problem<Set>& problem, const vector& w0, solver_config config,
                         sample_source& stream, const evaluation& eval = {}) {
  config.variant = solver_variant::osdca_full;
  return detail::run_osdca(problem, w0, config, stream, eval);
}

/// Online stochastic DCA with the exact first component in the subproblem.
template <projectable_set Set>
run_trace run_osdca_exact_g(const basic_dc_problem<Set>& problem, const vector& w0, solver_config config,
                            sample_source& stream, const evaluation& eval = {}) {
  config.variant = solver_variant::osdca_exact_g;
  return detail::run_osdca(problem, w0, config, stream, eval);
}

/// Online stochastic DCA with exact subgradients of H.
template <projectable_set Set>
run_trace run_osdca_exact_dh(const basic_dc_problem<Set>& problem, const vector& w0, solver_config config,
                             sample_source& stream, const evaluation& eval = {}) {
  config.variant = solver_variant::osdca_exact_dh;
  return detail::run_osdca(problem, w0, config, stream, eval);
}

/// Step size of the PSS baseline at iteration k (1-based).
inline double pss_stepsize(const solver_config& config, std::uint64_t k) {
  return config.variant == solver_variant::pss_diminishing ? config.stepsize_c / static_cast<double>(k)
                                                           : config.stepsize;
}

/// Projected stochastic subgradient: w^{k+1} = P_S(w^k - a_k zeta^k), one sample per step.
template <projectable_set Set>
run_trace run_pss(const basic_dc_problem<Set>& problem, const vector& w0, solver_config config,
                  sample_source& stream, const evaluation& eval = {}) {
  if (!is_pss(config.variant)) config.variant = solver_variant::pss_constant;
  if (!problem.objective_subgradient) throw precondition_error("pss: problem has no objective subgradient");
  detail::check_start(problem, w0);
  run_trace trace;
  trace.variant = config.variant;
  trace.sampling_mode = stream.mode();
  trace.initial = w0;
  if (eval.enabled()) trace.initial_objective = eval.objective(w0, stream.consumed());

  vector w = w0;
  std::int64_t elapsed = 0;
  std::size_t consumed = 0;
  trace.reason = termination::max_iterations;
  for (std::uint64_t k = 1;; ++k) {
    if (k > config.max_iterations) {
      trace.reason = termination::max_iterations;
      break;
    }
    if (config.max_samples != 0 && consumed >= config.max_samples) {
      trace.reason = termination::budget_exhausted;
      break;
    }
    const auto start = detail::clock::now();
    const sample_span batch = stream.take(1);
    if (batch.empty()) {
      trace.reason = termination::data_exhausted;
      break;
    }
    const vector zeta = problem.objective_subgradient(w, batch[0]);
    vector next = problem.feasible_set.project(w - pss_stepsize(config, k) * zeta);
    elapsed += detail::elapsed_ns(start);
    ++consumed;
    const double disp = (next - w).norm();
    w = std::move(next);
    trace_record rec{static_cast<std::size_t>(k), w, 1, consumed, std::nullopt, elapsed, disp};
    if (eval.enabled() && k % eval.cadence == 0) rec.objective = eval.objective(w, consumed);
    trace.records.push_back(std::move(rec));
  }
  detail::finish_evaluations(trace, eval);
  trace.final_w = w;
  return trace;
}

/// Dispatch on config.variant. Deterministic DCA consumes the whole `stream`
/// up front and runs on it as a finite data set.
template <projectable_set Set>
run_trace run_solver(const basic_dc_problem<Set>& problem, const vector& w0, const solver_config& config,
                     sample_source& stream, const evaluation& eval = {}) {
  switch (config.variant) {
    case solver_variant::dca: {
      std::vector<vector> data;
      for (;;) {
        const sample_span s = stream.take(4096);
        if (s.empty()) break;
        data.insert(data.end(), s.begin(), s.end());
      }
      return run_dca(problem, w0, config, sample_span{data.data(), data.size()}, eval);
    }
    case solver_variant::osdca_full:
    case solver_variant::osdca_exact_g:
    case solver_variant::osdca_exact_dh: return detail::run_osdca(problem, w0, config, stream, eval);
    case solver_variant::pss_constant:
    case solver_variant::pss_diminishing: return run_pss(problem, w0, config, stream, eval);
  }
  throw error("unknown solver variant");
}

}  // namespace osdca

#endif  // OSDCA_SOLVERS_HPP
