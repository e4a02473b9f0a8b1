// osdca command-line frontend.
//
// Exit codes:
//   0  success
//   1  validate-schedule: schedule rejected; fetch-check: manifest mismatch
//   2  bad arguments or config
//   3  data error (missing or malformed file)
//   4  solver precondition failure
//   5  degenerate validation problem (no spectral gap)
//   6  any other failure (e.g. cannot write output)

#include "osdca/osdca.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

using namespace osdca;

namespace {

enum exit_code : int { ok = 0, rejected = 1, bad_args = 2, bad_data = 3, bad_precondition = 4, degenerate = 5, failure = 6 };

struct manifest_entry {
  index_t features;
  std::size_t train_rows;
  std::size_t test_rows;
};

const std::map<std::string, manifest_entry>& manifest() {
  static const std::map<std::string, manifest_entry> m{
      {"letter", {16, 15000, 5000}},
      {"shuttle", {9, 43500, 14500}},
  };
  return m;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---------------------------------------------------------------------------

struct fetch_check_args {
  std::string name;
  std::string train;
  std::string test;
};

int fetch_check(const fetch_check_args& a) {
  const auto it = manifest().find(a.name);
  if (it == manifest().end()) throw config_error("fetch-check: unknown dataset " + a.name);
  const manifest_entry& m = it->second;
  const dataset train = load_dataset(a.train);
  const dataset test = load_dataset(a.test);
  bool good = true;
  auto check = [&](const char* what, std::size_t got, std::size_t want) {
    const bool match = got == want;
    std::printf("%-16s %8zu  expected %8zu  %s\n", what, got, want, match ? "ok" : "MISMATCH");
    good = good && match;
  };
  // Sparse rows may omit trailing zero features, so the width is an upper bound.
  check("features", static_cast<std::size_t>(std::max(train.dimension, test.dimension)),
        static_cast<std::size_t>(m.features));
  check("train rows", train.size(), m.train_rows);
  check("test rows", test.size(), m.test_rows);
  return good ? ok : rejected;
}

// ---------------------------------------------------------------------------

struct solve_args {
  std::string solver = "osdca-exact-g";
  std::string data;
  std::string validation;
  std::optional<index_t> dimension;
  bool no_normalize = false;
  bool no_shuffle = false;
  int decomposition = 1;
  double lambda = 1.0;
  double L = 1.0;
  std::string backend = "inner-dca";
  double inner_tolerance = 1e-5;
  std::size_t inner_max_iters = 200;
  std::string schedule = "k2";
  double stepsize = 0.005;
  double stepsize_c = 8.0;
  std::size_t max_iterations = 0;
  std::size_t max_samples = 0;
  double tolerance = 1e-8;
  std::size_t cadence = 0;
  std::uint64_t seed = 0;
  bool override_preconditions = false;
  std::string output = "trace.csv";
};

int solve(const solve_args& a) {
  bench::solver_entry e;
  const auto variant = parse_solver_variant(a.solver);
  if (!variant) throw config_error("--solver: unknown solver " + a.solver);
  e.config.variant = *variant;
  e.decomposition = a.decomposition;
  if (e.decomposition == 2 && e.config.variant == solver_variant::osdca_exact_g)
    throw config_error("--solver osdca-exact-g needs --decomposition 1");
  e.d1.lambda = a.lambda;
  e.d2.L = a.L;
  e.d2.inner_tolerance = a.inner_tolerance;
  e.d2.inner_max_iters = a.inner_max_iters;
  const auto backend = epca::parse_backend(a.backend);
  if (!backend) throw config_error("--backend: expected inner-dca or projected-gradient");
  e.d2.backend = *backend;
  const auto schedule = parse_schedule(a.schedule);
  if (!schedule) throw config_error("--schedule: expected a schedule like k2 or 4k3");
  e.config.schedule = *schedule;
  e.config.stepsize = a.stepsize;
  e.config.stepsize_c = a.stepsize_c;
  if (a.max_iterations) e.config.max_iterations = a.max_iterations;
  e.config.max_samples = a.max_samples;
  e.config.stop_tolerance = a.tolerance;
  e.config.override_preconditions = a.override_preconditions;
  e.config.seed = a.seed;
  e.cadence = a.cadence;

  // The schedule condition depends only on the variant and decomposition, so
  // check it before touching the data.
  if (is_stochastic(e.config.variant) && !is_pss(e.config.variant) && !a.override_preconditions) {
    const dc_problem probe = bench::detail::problem_for(e, 1);
    if (check_schedule(probe, e.config) != schedule_validity::valid)
      throw precondition_error("schedule " + e.config.schedule.describe() + " is " +
                               to_string(check_schedule(probe, e.config)) +
                               ": sum_k n_k^-beta must converge (p * beta > 1); pass --override to run anyway");
  }
  if (a.data.empty()) throw config_error("--data is required");

  dataset train = load_dataset(a.data, a.dimension);
  dataset val = a.validation.empty() ? train : load_dataset(a.validation, train.dimension);
  if (val.dimension != train.dimension)
    throw data_error("validation dimension " + std::to_string(val.dimension) + " differs from training dimension " +
                     std::to_string(train.dimension));
  if (!a.no_normalize) {
    train = normalize_unit(std::move(train));
    val = normalize_unit(std::move(val));
  }
  if (!a.no_shuffle) train = shuffle(std::move(train), split_seed(a.seed, seed_tag::shuffle));

  const dc_problem p = bench::detail::problem_for(e, train.dimension);
  const vector w0 = default_initial_point(p.feasible_set, split_seed(a.seed, seed_tag::init));
  const epca::moment_objective objective(val.view());
  evaluation ev{[&](const vector& w, std::size_t) { return objective(w); }, e.effective_cadence()};
  one_pass_source stream(train);
  const run_trace tr = run_solver(p, w0, e.config, stream, ev);
  for (const auto& w : tr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  std::ofstream out(a.output, std::ios::binary);
  if (!out) throw error("cannot write " + a.output);
  out << "iter,batch,samples,seconds,objective,displacement\n";
  out << "0,0,0,0," << bench::format_real(*tr.initial_objective) << ",0\n";
  for (const auto& r : tr.records)
    out << r.iteration << ',' << r.batch_size << ',' << r.samples_consumed << ','
        << bench::format_real(static_cast<double>(r.wall_clock_ns) * 1e-9) << ','
        << (r.objective ? bench::format_real(*r.objective) : std::string()) << ','
        << bench::format_real(r.displacement) << '\n';

  const double terminal = objective(tr.final_w);
  const double residual = criticality_residual(p, tr.final_w, val.view()).residual;
  std::printf("solver                %s\n", to_string(tr.variant));
  std::printf("iterations            %zu\n", tr.records.size());
  std::printf("samples consumed      %zu\n", tr.samples_consumed());
  std::printf("termination           %s\n", to_string(tr.reason));
  std::printf("terminal objective    %.12g\n", terminal);
  std::printf("criticality residual  %.3e\n", residual);
  if (tr.subproblem_failures)
    std::printf("subproblem failures   %zu (max residual %.3e)\n", tr.subproblem_failures, tr.max_subproblem_residual);
  std::printf("trace                 %s\n", a.output.c_str());
  return ok;
}

// ---------------------------------------------------------------------------

struct experiment_args {
  std::string config;
  std::string output_dir;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> runs;
};

int experiment(const experiment_args& a) {
  bench::experiment_config c = bench::load_experiment_config(a.config);
  if (!a.output_dir.empty()) c.output_dir = a.output_dir;
  if (a.threads) c.threads = *a.threads;
  if (a.runs) {
    if (*a.runs == 0) throw config_error("--runs: must be positive");
    c.n_runs = *a.runs;
  }
  const bench::experiment_result r = bench::run_experiment(c);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const auto csv = bench::write_artifacts(r);

  std::printf("experiment %s (%s), %zu runs\n", c.id.c_str(), to_string(c.kind), c.n_runs);
  for (std::size_t i = 0; i < r.truths.size(); ++i)
    std::printf("F* %s= %.12g  (|cos| with eigen oracle %.9f)\n", r.truths.size() > 1 ? (i ? "[b] " : "[a] ") : "",
                r.truths[i].F_star, r.truths[i].cosine);
  std::printf("%-28s %-26s %12s %10s\n", "solver", "terminal suboptimality", "samples", "seconds");
  for (const auto& curve : r.curves) {
    const auto t = curve.terminal_values();
    const auto& last = curve.mean.back();
    const std::string sub = fmt("%.3e", bench::mean_of(t)) + " +- " + fmt("%.2e", bench::stddev_of(t));
    std::printf("%-28s %-26s %12zu %10.4f\n", curve.solver.c_str(), sub.c_str(), last.samples, last.seconds);
    if (r.switch_index) {
      const auto pre = bench::pre_switch_terminal(curve, *r.switch_index);
      std::printf("%-28s %-26s\n", "  (before switch)",
                  (fmt("%.3e", bench::mean_of(pre)) + " +- " + fmt("%.2e", bench::stddev_of(pre))).c_str());
    }
  }
  std::printf("wrote %s and %s\n", csv.string().c_str(), csv.parent_path().append(c.id + ".svg").string().c_str());
  return ok;
}

// ---------------------------------------------------------------------------

struct oracle_args {
  std::string data;
  std::optional<index_t> dimension;
  bool no_normalize = false;
  std::uint64_t seed = 0;
};

int oracle(const oracle_args& a) {
  dataset v = load_dataset(a.data, a.dimension);
  if (!a.no_normalize) v = normalize_unit(std::move(v));
  const bench::w_star_result r = bench::compute_w_star(v.view(), a.seed);
  std::printf("samples               %zu\n", v.size());
  std::printf("dimension             %ld\n", static_cast<long>(v.dimension));
  std::printf("top eigenvalue        %.15g\n", r.oracle.eigenvalue);
  std::printf("second eigenvalue     %.15g\n", r.oracle.second_eigenvalue);
  std::printf("F* (eigen)            %.15g\n", r.oracle.F_star());
  std::printf("F* (DCA)              %.15g\n", r.F_star);
  std::printf("|cos(w*, v)|          %.15f\n", r.cosine);
  std::printf("agreement             %s\n", r.agrees ? "yes" : "no");
  std::printf("degenerate            %s\n", r.degenerate() ? "yes" : "no");
  return r.degenerate() ? degenerate : ok;
}

// ---------------------------------------------------------------------------

struct validate_args {
  std::string schedule = "k2";
  double beta = 1.0;
};

int validate(const validate_args& a) {
  const auto s = parse_schedule(a.schedule);
  if (!s) throw config_error("--schedule: expected a schedule like k2 or 4k3");
  if (!(a.beta > 0.0 && a.beta <= 1.0)) throw config_error("--beta: must lie in (0, 1]");
  const schedule_validity v = validate_schedule(*s, a.beta);
  std::printf("schedule %s, beta %g, p * beta = %g: %s\n", s->describe().c_str(), a.beta, s->exponent * a.beta,
              to_string(v));
  return v == schedule_validity::valid ? ok : rejected;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online stochastic DCA and baselines for expected PCA", "osdca"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "osdca 1.0.0");

  fetch_check_args fc;
  auto* fetch_cmd = app.add_subcommand("fetch-check", "Check downloaded dataset files against the known sizes");
  fetch_cmd->add_option("--dataset", fc.name, "Dataset name (letter or shuttle)")->required();
  fetch_cmd->add_option("--train", fc.train, "Training file (LIBSVM or binary cache)")->required();
  fetch_cmd->add_option("--test", fc.test, "Test/validation file (LIBSVM or binary cache)")->required();

  solve_args sv;
  auto* solve_cmd = app.add_subcommand("solve", "Run one solver once and write its trace");
  solve_cmd->add_option("--solver", sv.solver,
                        "dca, osdca-full, osdca-exact-g, osdca-exact-dh, pss-constant or pss-diminishing")
      ->capture_default_str();
  solve_cmd->add_option("--data", sv.data, "Training file (LIBSVM or binary cache)");
  solve_cmd->add_option("--validation", sv.validation, "Evaluation file (default: the training file)");
  solve_cmd->add_option("--dimension", sv.dimension, "Feature count (default: widest row)");
  solve_cmd->add_flag("--no-normalize", sv.no_normalize, "Keep samples unnormalized");
  solve_cmd->add_flag("--no-shuffle", sv.no_shuffle, "Stream the file in its stored order");
  solve_cmd->add_option("--decomposition", sv.decomposition, "E-PCA decomposition (1 or 2)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  solve_cmd->add_option("--lambda", sv.lambda, "Regularization of decomposition 1")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  solve_cmd->add_option("--L", sv.L, "Curvature constant of decomposition 2")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve_cmd->add_option("--backend", sv.backend, "Subproblem solver of decomposition 2 (inner-dca or projected-gradient)")
      ->capture_default_str();
  solve_cmd->add_option("--inner-tolerance", sv.inner_tolerance, "Subproblem stopping tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve_cmd->add_option("--inner-max-iters", sv.inner_max_iters, "Subproblem iteration limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve_cmd->add_option("--schedule", sv.schedule, "Batch schedule n_k = ceil(c k^p), written k<p> or <c>k<p>")
      ->capture_default_str();
  solve_cmd->add_option("--stepsize", sv.stepsize, "PSS constant step")->check(CLI::PositiveNumber)->capture_default_str();
  solve_cmd->add_option("--stepsize-c", sv.stepsize_c, "PSS diminishing step c / k")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve_cmd->add_option("--max-iterations", sv.max_iterations, "Iteration limit (0: none)")->capture_default_str();
  solve_cmd->add_option("--max-samples", sv.max_samples, "Sample budget (0: none)")->capture_default_str();
  solve_cmd->add_option("--tolerance", sv.tolerance, "DCA displacement tolerance")->capture_default_str();
  solve_cmd->add_option("--cadence", sv.cadence, "Evaluate every j iterations (0: 1 for DCA/osDCA, 100 for PSS)")
      ->capture_default_str();
  solve_cmd->add_option("--seed", sv.seed, "Seed for the shuffle and the initial point")->capture_default_str();
  solve_cmd->add_flag("--override", sv.override_preconditions, "Run despite failed preconditions (with a warning)");
  solve_cmd->add_option("--output", sv.output, "Trace CSV path")->capture_default_str();

  experiment_args ex;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a configured multi-seed experiment and write CSV/SVG");
  exp_cmd->add_option("--config", ex.config, "Experiment config (JSON)")->required();
  exp_cmd->add_option("--output-dir", ex.output_dir, "Override the configured output directory");
  exp_cmd->add_option("--threads", ex.threads, "Override the worker count (0: hardware concurrency)");
  exp_cmd->add_option("--runs", ex.runs, "Override the number of runs");

  oracle_args oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "Compute the validation optimum by DCA and by eigendecomposition");
  oracle_cmd->add_option("--data", oa.data, "Validation file (LIBSVM or binary cache)")->required();
  oracle_cmd->add_option("--dimension", oa.dimension, "Feature count (default: widest row)");
  oracle_cmd->add_flag("--no-normalize", oa.no_normalize, "Keep samples unnormalized");
  oracle_cmd->add_option("--seed", oa.seed, "Seed for the DCA starting points")->capture_default_str();

  validate_args va;
  auto* validate_cmd = app.add_subcommand("validate-schedule", "Check sum_k n_k^-beta < infinity for a schedule");
  validate_cmd->add_option("--schedule", va.schedule, "Schedule, written k<p> or <c>k<p>")->capture_default_str();
  validate_cmd->add_option("--beta", va.beta, "Rate exponent beta in (0, 1]")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_args;
  }

  try {
    if (*fetch_cmd) return fetch_check(fc);
    if (*solve_cmd) return solve(sv);
    if (*exp_cmd) return experiment(ex);
    if (*oracle_cmd) return oracle(oa);
    if (*validate_cmd) return validate(va);
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return bad_args;
  } catch (const data_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return bad_data;
  } catch (const precondition_error& e) {
    std::fprintf(stderr, "precondition failed: %s\n", e.what());
    return bad_precondition;
  } catch (const degenerate_error& e) {
    std::fprintf(stderr, "degenerate: %s\n", e.what());
    return degenerate;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return failure;
  }
  return bad_args;
}
