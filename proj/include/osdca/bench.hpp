#ifndef OSDCA_BENCH_HPP
#define OSDCA_BENCH_HPP

// Experiment harness for the E-PCA application: repeated seeded runs of
// several solvers, suboptimality against the validation optimum, CSV and SVG
// output.
//
// Protocol per solver and run r:
//   run seed   = split_seed(master_seed, r)
//   training   = the training set shuffled with split_seed(run seed, shuffle)
//                (for a shift stream each phase is shuffled separately)
//   w0         = uniform in the ball, seed split_seed(run seed, init)
//   objective  = -1/2 w^T M w with M the validation second moment
// All solvers share the same shuffles and starting points for a given r.

#include "osdca/core.hpp"
#include "osdca/data.hpp"
#include "osdca/epca.hpp"
#include "osdca/random.hpp"
#include "osdca/schedules.hpp"
#include "osdca/solvers.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace osdca::bench {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Ground truth

struct w_star_result {
  vector w_star;
  double F_star = 0.0;
  epca::eigen_result oracle;
  /// |cos(w_star, v)| from the eigen oracle.
  double cosine = 0.0;
  /// DCA and the eigen oracle agree: |cos| >= 1 - 1e-6 and |F* + eigenvalue/2| <= 1e-8.
  bool agrees = false;
  bool degenerate() const { return oracle.degenerate; }
};

inline constexpr double w_star_cosine_tolerance = 1e-6;
inline constexpr double w_star_value_tolerance = 1e-8;

/// Validation optimum by deterministic DCA (decomposition 1, lambda = 1,
/// tolerance 1e-10) from five seeded starts, cross-checked with the eigen oracle.
inline w_star_result compute_w_star(sample_span validation, std::uint64_t seed = 0) {
  if (validation.empty()) throw data_error("compute_w_star: empty validation set");
  const index_t m = validation.front().size();
  const dc_problem p = epca::make_problem(epca::decomposition1{1.0}, m);
  solver_config c;
  c.variant = solver_variant::dca;
  c.stop_tolerance = 1e-10;
  c.max_iterations = 100000;
  w_star_result out;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t start = 0; start < 5; ++start) {
    const vector w0 = default_initial_point(p.feasible_set, split_seed(split_seed(seed, seed_tag::validation), start));
    const run_trace tr = run_dca(p, w0, c, validation);
    const double f = epca::objective(tr.final_w, validation);
    if (f < best) {
      best = f;
      out.w_star = tr.final_w;
    }
  }
  out.F_star = best;
  out.oracle = epca::top_eigenvector(validation);
  out.cosine = std::abs(out.w_star.dot(out.oracle.v)) / out.w_star.norm();
  out.agrees = out.cosine >= 1.0 - w_star_cosine_tolerance &&
               std::abs(out.F_star + 0.5 * out.oracle.eigenvalue) <= w_star_value_tolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class experiment_kind { compare_solvers, lambda_sweep, subproblem_backends, adaptivity };

inline const char* to_string(experiment_kind k) {
  switch (k) {
    case experiment_kind::compare_solvers: return "compare-solvers";
    case experiment_kind::lambda_sweep: return "lambda-sweep";
    case experiment_kind::subproblem_backends: return "subproblem-backends";
    case experiment_kind::adaptivity: return "adaptivity";
  }
  return "?";
}

struct file_data {
  std::string train;
  std::string validation;
  std::optional<index_t> dimension;
  bool normalize = true;
};

struct gaussian_data {
  index_t dimension = 0;
  covariance_spec covariance;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  std::uint64_t seed = 0;
};

using data_binding = std::variant<file_data, gaussian_data, shift_stream_spec>;

struct solver_entry {
  std::string label;
  solver_config config;
  /// 1 or 2.
  int decomposition = 1;
  epca::decomposition1 d1;
  epca::decomposition2 d2;
  /// Evaluate every `cadence` iterations; 0 selects 1 for DCA/osDCA and 100 for PSS.
  std::size_t cadence = 0;

  std::size_t effective_cadence() const {
    if (cadence != 0) return cadence;
    return is_pss(config.variant) ? 100 : 1;
  }
};

struct experiment_config {
  std::string id;
  std::string description;
  experiment_kind kind = experiment_kind::compare_solvers;
  data_binding data;
  std::vector<solver_entry> solvers;
  std::size_t n_runs = 20;
  std::uint64_t master_seed = 0;
  std::string output_dir;
  /// Worker threads; 0 uses the hardware concurrency.
  std::size_t threads = 0;
};

namespace detail {

// Field-path aware JSON reading. Every error names the offending field.
class reader {
 public:
  reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw config_error((path_.empty() ? std::string("config") : path_) + ": " + what);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) const {
    if (!has(key)) throw config_error(field(key) + ": required field missing");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) const {
    const json& v = at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw config_error("");
        return v.get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw config_error("");
        return v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw config_error("");
        return v.get<std::string>();
      } else {
        static_assert(std::is_unsigned_v<T>);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
          throw config_error("");
        return v.get<T>();
      }
    } catch (const std::exception&) {
      throw config_error(field(key) + ": expected " + type_name<T>());
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  double positive(const std::string& key, double fallback) const {
    const double v = get<double>(key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) throw config_error(field(key) + ": must be positive");
    return v;
  }

  reader child(const std::string& key) const { return reader(at(key), field(key)); }

  /// Reject keys that were never looked up.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw config_error(field(it.key()) + ": unknown field");
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    if constexpr (std::is_same_v<T, bool>) return "true or false";
    if constexpr (std::is_same_v<T, std::string>) return "a string";
    return "a nonnegative integer";
  }

  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

inline covariance_spec read_covariance(const reader& r, index_t dimension) {
  covariance_spec c;
  c.basis_seed = r.get<std::uint64_t>("basis_seed", 0);
  if (r.has("eigenvalues")) {
    const json& e = r.at("eigenvalues");
    if (!e.is_array()) r.fail("eigenvalues: expected an array");
    for (const auto& x : e) {
      if (!x.is_number()) throw config_error(r.field("eigenvalues") + ": expected numbers");
      c.eigenvalues.push_back(x.get<double>());
    }
  } else {
    // Shorthand: leading eigenvalues followed by a constant fill.
    const json& lead = r.at("leading");
    if (!lead.is_array()) throw config_error(r.field("leading") + ": expected an array");
    for (const auto& x : lead) {
      if (!x.is_number()) throw config_error(r.field("leading") + ": expected numbers");
      c.eigenvalues.push_back(x.get<double>());
    }
    const double fill = r.get<double>("fill", 1.0);
    if (static_cast<index_t>(c.eigenvalues.size()) > dimension)
      throw config_error(r.field("leading") + ": longer than the dimension");
    c.eigenvalues.resize(static_cast<std::size_t>(dimension), fill);
  }
  if (static_cast<index_t>(c.eigenvalues.size()) != dimension)
    throw config_error(r.field("eigenvalues") + ": expected " + std::to_string(dimension) + " values");
  for (double e : c.eigenvalues)
    if (!(e > 0.0) || !std::isfinite(e)) throw config_error(r.field("eigenvalues") + ": must be positive");
  r.finish();
  return c;
}

inline data_binding read_data(const reader& r) {
  if (!r.has("generator")) {
    file_data f;
    f.train = r.get<std::string>("train");
    f.validation = r.get<std::string>("validation");
    if (r.has("dimension")) f.dimension = static_cast<index_t>(r.get<std::uint64_t>("dimension"));
    f.normalize = r.get<bool>("normalize", true);
    r.finish();
    return f;
  }
  const std::string gen = r.get<std::string>("generator");
  const auto dim = static_cast<index_t>(r.get<std::uint64_t>("dimension"));
  if (dim < 1) throw config_error(r.field("dimension") + ": must be positive");
  if (gen == "gaussian") {
    gaussian_data g;
    g.dimension = dim;
    g.covariance = read_covariance(r.child("covariance"), dim);
    g.train_count = r.get<std::uint64_t>("train_count");
    g.validation_count = r.get<std::uint64_t>("validation_count");
    g.seed = r.get<std::uint64_t>("seed", 0);
    if (g.train_count == 0 || g.validation_count == 0) r.fail("sample counts must be positive");
    r.finish();
    return g;
  }
  if (gen == "shift-stream") {
    shift_stream_spec s;
    s.dimension = dim;
    s.covariance_a = read_covariance(r.child("covariance_a"), dim);
    s.covariance_b = read_covariance(r.child("covariance_b"), dim);
    s.switch_index = r.get<std::uint64_t>("switch_index");
    s.total = r.get<std::uint64_t>("total");
    s.validation_a_count = r.get<std::uint64_t>("validation_a_count");
    s.validation_b_count = r.get<std::uint64_t>("validation_b_count");
    s.seed = r.get<std::uint64_t>("seed", 0);
    try {
      s.validate();
    } catch (const error& e) {
      r.fail(e.what());
    }
    r.finish();
    return s;
  }
  throw config_error(r.field("generator") + ": expected \"gaussian\" or \"shift-stream\"");
}

inline sample_schedule read_schedule(const reader& r, const std::string& key) {
  const json& v = r.at(key);
  if (v.is_string()) {
    auto s = parse_schedule(v.get<std::string>());
    if (!s) throw config_error(r.field(key) + ": expected a schedule like \"k2\"");
    return *s;
  }
  const reader s(v, r.field(key));
  sample_schedule out;
  out.base = s.get<std::uint64_t>("base", 1);
  out.exponent = s.positive("exponent", 2.0);
  if (s.has("cap")) out.cap = s.get<std::uint64_t>("cap");
  if (out.base == 0) throw config_error(s.field("base") + ": must be positive");
  s.finish();
  return out;
}

inline solver_entry read_solver(const reader& r) {
  solver_entry e;
  const std::string variant = r.get<std::string>("variant");
  const auto v = parse_solver_variant(variant);
  if (!v) throw config_error(r.field("variant") + ": unknown solver \"" + variant + "\"");
  e.config.variant = *v;
  e.label = r.get<std::string>("label", variant);
  e.decomposition = static_cast<int>(r.get<std::uint64_t>("decomposition", 1));
  if (e.decomposition != 1 && e.decomposition != 2) throw config_error(r.field("decomposition") + ": must be 1 or 2");
  if (e.decomposition == 2 && e.config.variant == solver_variant::osdca_exact_g)
    throw config_error(r.field("variant") + ": osdca-exact-g needs decomposition 1 (G is unknown for 2)");
  e.d1.lambda = r.get<double>("lambda", 1.0);
  if (!(e.d1.lambda >= 0.0)) throw config_error(r.field("lambda") + ": must be nonnegative");
  e.d2.L = r.positive("L", 1.0);
  e.d2.inner_tolerance = r.positive("inner_tolerance", 1e-5);
  e.d2.inner_max_iters = r.get<std::uint64_t>("inner_max_iters", 200);
  if (e.d2.inner_max_iters == 0) throw config_error(r.field("inner_max_iters") + ": must be positive");
  if (r.has("backend")) {
    const auto b = epca::parse_backend(r.get<std::string>("backend"));
    if (!b) throw config_error(r.field("backend") + ": expected \"inner-dca\" or \"projected-gradient\"");
    e.d2.backend = *b;
  }
  e.config.schedule = r.has("schedule") ? read_schedule(r, "schedule")
                                        : sample_schedule::power(e.decomposition == 2 ? 3.0 : 2.0);
  e.config.stepsize = r.positive("stepsize", 0.005);
  e.config.stepsize_c = r.positive("stepsize_c", 8.0);
  e.config.max_iterations = r.get<std::uint64_t>("max_iterations", e.config.max_iterations);
  e.config.max_samples = r.get<std::uint64_t>("max_samples", 0);
  e.config.stop_tolerance = r.get<double>("stop_tolerance", e.config.stop_tolerance);
  e.config.override_preconditions = r.get<bool>("override_preconditions", false);
  e.cadence = r.get<std::uint64_t>("cadence", 0);
  r.finish();
  return e;
}

inline std::string lambda_label(const std::string& base, double lambda) {
  char buf[64];
  std::snprintf(buf, sizeof buf, " (lambda=%g)", lambda);
  return base + buf;
}

}  // namespace detail

/// Parse an experiment config (JSON). Schema:
///
///   experiment   "compare-solvers" | "lambda-sweep" | "subproblem-backends" | "adaptivity"
///   id           string, default = experiment
///   description  free text, optional
///   data         {train, validation, dimension?, normalize?}
///              | {generator: "gaussian", dimension, covariance, train_count, validation_count, seed?}
///              | {generator: "shift-stream", dimension, covariance_a, covariance_b,
///                 switch_index, total, validation_a_count, validation_b_count, seed?}
///                covariance = {eigenvalues: [...]} or {leading: [...], fill?}, plus basis_seed?
///   solvers      [{variant, label?, decomposition?, lambda?, L?, inner_tolerance?,
///                  inner_max_iters?, backend?, schedule?, stepsize?, stepsize_c?,
///                  max_iterations?, max_samples?, stop_tolerance?,
///                  override_preconditions?, cadence?}]
///   lambdas      lambda-sweep only: every solver is repeated for each value;
///                lambda = 0 entries run with override_preconditions
///   runs         default 20
///   master_seed  default 0
///   cadence      default evaluation cadence for solvers that set none
///   output_dir   default "results/<id>"
///   threads      default 0 (hardware concurrency)
inline experiment_config parse_experiment_config(const json& j) {
  const detail::reader r(j, "");
  experiment_config c;
  const std::string kind = r.get<std::string>("experiment");
  if (kind == "compare-solvers") c.kind = experiment_kind::compare_solvers;
  else if (kind == "lambda-sweep") c.kind = experiment_kind::lambda_sweep;
  else if (kind == "subproblem-backends") c.kind = experiment_kind::subproblem_backends;
  else if (kind == "adaptivity") c.kind = experiment_kind::adaptivity;
  else throw config_error("experiment: unknown experiment \"" + kind + "\"");
  c.id = r.get<std::string>("id", kind);
  c.description = r.get<std::string>("description", "");
  if (c.id.empty() || c.id.find_first_of("/\\") != std::string::npos) throw config_error("id: must be a plain name");
  c.data = detail::read_data(r.child("data"));
  if (c.kind == experiment_kind::adaptivity && !std::holds_alternative<shift_stream_spec>(c.data))
    throw config_error("data.generator: the adaptivity experiment needs a shift-stream");
  if (c.kind != experiment_kind::adaptivity && std::holds_alternative<shift_stream_spec>(c.data))
    throw config_error("data.generator: shift-stream data is only used by the adaptivity experiment");
  c.n_runs = r.get<std::uint64_t>("runs", 20);
  if (c.n_runs == 0) throw config_error("runs: must be positive");
  c.master_seed = r.get<std::uint64_t>("master_seed", 0);
  const std::size_t cadence = r.get<std::uint64_t>("cadence", 0);
  c.output_dir = r.get<std::string>("output_dir", "results/" + c.id);
  c.threads = r.get<std::uint64_t>("threads", 0);

  const json& solvers = r.at("solvers");
  if (!solvers.is_array() || solvers.empty()) throw config_error("solvers: expected a nonempty array");
  std::vector<solver_entry> base;
  for (std::size_t i = 0; i < solvers.size(); ++i) {
    solver_entry e = detail::read_solver(detail::reader(solvers[i], "solvers[" + std::to_string(i) + "]"));
    if (e.cadence == 0) e.cadence = cadence;
    base.push_back(std::move(e));
  }
  if (c.kind == experiment_kind::lambda_sweep) {
    const json& grid = r.at("lambdas");
    if (!grid.is_array() || grid.empty()) throw config_error("lambdas: expected a nonempty array");
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (!grid[i].is_number() || !(grid[i].get<double>() >= 0.0))
        throw config_error("lambdas[" + std::to_string(i) + "]: expected a nonnegative number");
    for (const auto& e : base) {
      if (e.decomposition != 1) throw config_error("solvers: the lambda sweep uses decomposition 1");
      for (const auto& l : grid) {
        solver_entry x = e;
        x.d1.lambda = l.get<double>();
        x.label = detail::lambda_label(e.label, x.d1.lambda);
        if (x.d1.lambda == 0.0) x.config.override_preconditions = true;
        c.solvers.push_back(std::move(x));
      }
    }
  } else {
    c.solvers = std::move(base);
  }
  std::set<std::string> labels;
  for (const auto& e : c.solvers)
    if (!labels.insert(e.label).second) throw config_error("solvers: duplicate label \"" + e.label + "\"");
  r.finish();
  return c;
}

inline experiment_config load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error(path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Results

struct curve_point {
  std::size_t iteration = 0;
  std::size_t samples = 0;
  double seconds = 0.0;
  double objective = 0.0;
  double suboptimality = 0.0;
};

struct run_result {
  std::size_t run = 0;
  std::vector<curve_point> points;
  termination reason = termination::max_iterations;
  std::vector<std::string> warnings;
  std::size_t subproblem_failures = 0;

  const curve_point& terminal() const { return points.back(); }
};

/// One solver across all runs. `mean` averages the per-run points index by
/// index over the runs that reach that index.
struct suboptimality_curve {
  std::string experiment;
  std::string solver;
  solver_variant variant = solver_variant::dca;
  std::vector<run_result> runs;
  std::vector<curve_point> mean;
  double F_star = 0.0;
  double w_star_check = 0.0;

  std::vector<double> terminal_values() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.terminal().suboptimality);
    return v;
  }
};

struct phase_truth {
  w_star_result truth;
  double F_star = 0.0;
  epca::moment_objective objective;
};

struct experiment_result {
  experiment_config config;
  std::vector<suboptimality_curve> curves;
  std::vector<w_star_result> truths;
  /// Adaptivity only: number of training samples before the switch.
  std::optional<std::size_t> switch_index;
  std::vector<std::string> warnings;
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(v.size(), [&](std::size_t i) { return v[i]; }) / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  const double ss = pairwise_sum(v.size(), [&](std::size_t i) { return (v[i] - m) * (v[i] - m); });
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline std::vector<curve_point> mean_curve(const std::vector<run_result>& runs) {
  std::vector<curve_point> out;
  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.points.size());
  for (std::size_t i = 0; i < longest; ++i) {
    std::vector<double> sec, obj, sub, samples, iters;
    for (const auto& r : runs) {
      if (i >= r.points.size()) continue;
      sec.push_back(r.points[i].seconds);
      obj.push_back(r.points[i].objective);
      sub.push_back(r.points[i].suboptimality);
      samples.push_back(static_cast<double>(r.points[i].samples));
      iters.push_back(static_cast<double>(r.points[i].iteration));
    }
    out.push_back({static_cast<std::size_t>(std::llround(mean_of(iters))),
                   static_cast<std::size_t>(std::llround(mean_of(samples))), mean_of(sec), mean_of(obj),
                   mean_of(sub)});
  }
  return out;
}

/// Terminal comparison of two curves from the same experiment:
/// gap = mean terminal suboptimality of b minus that of a; time_ratio =
/// mean wall-clock of b to its terminal point over that of a.
struct gap_summary {
  double terminal_gap = 0.0;
  double time_ratio = 1.0;
};

inline gap_summary summarize_gap(const suboptimality_curve& a, const suboptimality_curve& b) {
  if (a.experiment != b.experiment) throw error("summarize_gap: curves come from different experiments");
  if (a.runs.empty() || b.runs.empty()) throw error("summarize_gap: empty curve");
  gap_summary g;
  g.terminal_gap = mean_of(b.terminal_values()) - mean_of(a.terminal_values());
  auto terminal_time = [](const suboptimality_curve& c) {
    std::vector<double> t;
    for (const auto& r : c.runs) t.push_back(r.terminal().seconds);
    return mean_of(t);
  };
  const double ta = terminal_time(a), tb = terminal_time(b);
  g.time_ratio = ta == tb ? 1.0 : tb / ta;
  return g;
}

// ---------------------------------------------------------------------------
// Execution

namespace detail {

struct loaded_data {
  dataset train;
  /// Adaptivity: training samples [0, switch) are phase a.
  std::optional<std::size_t> switch_index;
  std::vector<dataset> validation;
};

inline loaded_data load(const data_binding& binding) {
  loaded_data d;
  if (const auto* f = std::get_if<file_data>(&binding)) {
    d.train = load_dataset(f->train, f->dimension);
    dataset v = load_dataset(f->validation, f->dimension ? f->dimension : std::optional<index_t>(d.train.dimension));
    if (v.dimension != d.train.dimension) {
      // Sparse text files may omit trailing features; pad both to the larger width.
      const index_t m = std::max(v.dimension, d.train.dimension);
      for (dataset* ds : {&d.train, &v}) {
        for (auto& z : ds->samples) z.conservativeResizeLike(vector::Zero(m));
        ds->dimension = m;
      }
    }
    if (f->normalize) {
      d.train = normalize_unit(std::move(d.train));
      v = normalize_unit(std::move(v));
    }
    d.validation.push_back(std::move(v));
  } else if (const auto* g = std::get_if<gaussian_data>(&binding)) {
    d.train = gen_gaussian(g->dimension, g->covariance, g->train_count, split_seed(g->seed, 1));
    d.validation.push_back(gen_gaussian(g->dimension, g->covariance, g->validation_count, split_seed(g->seed, 2)));
  } else {
    shift_data s = gen_shift_stream(std::get<shift_stream_spec>(binding));
    d.train = std::move(s.training);
    d.switch_index = s.switch_index;
    d.validation.push_back(std::move(s.validation_a));
    d.validation.push_back(std::move(s.validation_b));
  }
  return d;
}

inline dataset shuffled_training(const loaded_data& d, std::uint64_t seed) {
  if (!d.switch_index) return shuffle(d.train, seed);
  // Shuffle within each phase so the switch stays in place.
  dataset out = d.train;
  const std::size_t s = *d.switch_index;
  const auto pa = permutation(s, split_seed(seed, 1));
  const auto pb = permutation(d.train.size() - s, split_seed(seed, 2));
  for (std::size_t i = 0; i < s; ++i) out.samples[i] = d.train.samples[pa[i]];
  for (std::size_t i = s; i < d.train.size(); ++i) out.samples[i] = d.train.samples[s + pb[i - s]];
  out.origin.shuffle_seed = seed;
  return out;
}

inline dc_problem problem_for(const solver_entry& e, index_t dim) {
  return e.decomposition == 1 ? epca::make_problem(e.d1, dim) : epca::make_problem(e.d2, dim);
}

inline run_result run_one(const solver_entry& e, const loaded_data& d, const std::vector<phase_truth>& truth,
                          std::uint64_t master_seed, std::size_t run) {
  const std::uint64_t run_seed = split_seed(master_seed, run);
  const dataset train = shuffled_training(d, split_seed(run_seed, seed_tag::shuffle));
  const dc_problem p = problem_for(e, train.dimension);
  const vector w0 = default_initial_point(p.feasible_set, split_seed(run_seed, seed_tag::init));

  auto phase_of = [&](std::size_t consumed) -> std::size_t {
    return d.switch_index && consumed > *d.switch_index ? 1 : 0;
  };
  evaluation ev{[&](const vector& w, std::size_t consumed) { return truth[phase_of(consumed)].objective(w); },
                e.effective_cadence()};

  solver_config cfg = e.config;
  cfg.seed = run_seed;
  one_pass_source stream(train);
  const run_trace tr = run_solver(p, w0, cfg, stream, ev);

  run_result out;
  out.run = run;
  out.reason = tr.reason;
  out.warnings = tr.warnings;
  out.subproblem_failures = tr.subproblem_failures;
  const double f0 = *tr.initial_objective;
  out.points.push_back({0, 0, 0.0, f0, f0 - truth[0].F_star});
  for (const auto& r : tr.records) {
    if (!r.objective) continue;
    const std::size_t ph = phase_of(r.samples_consumed);
    out.points.push_back({r.iteration, r.samples_consumed, static_cast<double>(r.wall_clock_ns) * 1e-9, *r.objective,
                          *r.objective - truth[ph].F_star});
  }
  return out;
}

/// Run jobs 0..n-1 on a pool; each index is claimed exactly once.
template <class Job>
void parallel_for(std::size_t n, std::size_t threads, Job job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Tolerance for the invariant suboptimality >= -tol.
inline constexpr double negative_suboptimality_tolerance = 1e-9;

/// Run every solver n_runs times and collect suboptimality curves. Throws
/// degenerate_error when a validation second moment has no spectral gap.
inline experiment_result run_experiment(const experiment_config& config) {
  experiment_result res;
  res.config = config;
  const detail::loaded_data d = detail::load(config.data);
  res.switch_index = d.switch_index;

  std::vector<phase_truth> truth;
  for (const auto& v : d.validation) {
    w_star_result t = compute_w_star(v.view(), config.master_seed);
    if (t.degenerate())
      throw degenerate_error("validation second moment has a spectral gap below 1e-9; w* is not identifiable");
    if (!t.agrees) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "DCA w* disagrees with the eigen oracle (|cos| = %.12f, F* = %.12g, -lambda/2 = %.12g)",
                    t.cosine, t.F_star, -0.5 * t.oracle.eigenvalue);
      res.warnings.push_back(buf);
    }
    epca::moment_objective obj(v.view());
    const double fs = obj(t.w_star);
    res.truths.push_back(t);
    truth.push_back({std::move(t), fs, std::move(obj)});
  }

  const std::size_t n_solvers = config.solvers.size();
  std::vector<run_result> results(n_solvers * config.n_runs);
  detail::parallel_for(results.size(), config.threads, [&](std::size_t job) {
    const std::size_t s = job / config.n_runs, r = job % config.n_runs;
    results[job] = detail::run_one(config.solvers[s], d, truth, config.master_seed, r);
  });

  for (std::size_t s = 0; s < n_solvers; ++s) {
    suboptimality_curve c;
    c.experiment = config.id;
    c.solver = config.solvers[s].label;
    c.variant = config.solvers[s].config.variant;
    c.F_star = truth.back().F_star;
    c.w_star_check = truth.back().truth.cosine;
    for (std::size_t r = 0; r < config.n_runs; ++r) c.runs.push_back(std::move(results[s * config.n_runs + r]));
    c.mean = mean_curve(c.runs);
    for (const auto& run : c.runs)
      for (const auto& p : run.points)
        if (p.suboptimality < -negative_suboptimality_tolerance) {
          res.warnings.push_back(c.solver + ": negative suboptimality " + std::to_string(p.suboptimality));
          break;
        }
    res.curves.push_back(std::move(c));
  }
  return res;
}

/// Suboptimality at the last point evaluated on phase-a data (before the
/// switch) for each run. Adaptivity experiments only.
inline std::vector<double> pre_switch_terminal(const suboptimality_curve& c, std::size_t switch_index) {
  std::vector<double> out;
  for (const auto& r : c.runs) {
    std::optional<double> last;
    for (const auto& p : r.points)
      if (p.samples <= switch_index) last = p.suboptimality;
    if (last) out.push_back(*last);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline constexpr const char* csv_header = "experiment,solver,run,iter,samples,seconds,objective,suboptimality";

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace detail

/// Per-run rows (run = 0 .. n-1) followed by mean rows (run = "mean").
inline void write_csv(std::ostream& out, const std::vector<suboptimality_curve>& curves) {
  out << csv_header << '\n';
  auto row = [&](const suboptimality_curve& c, const std::string& run, const curve_point& p) {
    out << detail::csv_field(c.experiment) << ',' << detail::csv_field(c.solver) << ',' << run << ',' << p.iteration
        << ',' << p.samples << ',' << format_real(p.seconds) << ',' << format_real(p.objective) << ','
        << format_real(p.suboptimality) << '\n';
  };
  for (const auto& c : curves) {
    for (const auto& r : c.runs)
      for (const auto& p : r.points) row(c, std::to_string(r.run), p);
    for (const auto& p : c.mean) row(c, "mean", p);
  }
}

/// Drop the wall-clock column (the sixth) so that reruns compare byte for byte.
inline std::string canonicalize_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(cur);
    if (fields.size() > 5) fields.erase(fields.begin() + 5);
    for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + fields[i];
    out += '\n';
  }
  return out;
}

inline constexpr double svg_floor = 1e-16;

/// Line plot of the mean suboptimality (log10 axis, clipped at 1e-16) against
/// mean wall-clock seconds, one polyline per solver.
inline void write_svg(std::ostream& out, const std::vector<suboptimality_curve>& curves,
                      const std::string& title, std::optional<double> switch_seconds = std::nullopt) {
  if (curves.empty()) throw error("write_svg: no curves");
  const double W = 760, H = 480, left = 80, right = 200, top = 40, bottom = 60;
  double tmax = 0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : curves)
    for (const auto& p : c.mean) {
      tmax = std::max(tmax, p.seconds);
      const double y = std::log10(std::max(p.suboptimality, svg_floor));
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  if (!(tmax > 0)) tmax = 1;
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1;
  const double pw = W - left - right, ph = H - top - bottom;
  auto X = [&](double t) { return left + pw * t / tmax; };
  auto Y = [&](double s) { return top + ph * (hi - std::log10(std::max(s, svg_floor))) / (hi - lo); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, pw, ph);
  out << buf;
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = top + ph * (hi - e) / (hi - lo);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#ddd\"/>"
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">1e%d</text>\n",
                  left, y, left + pw, y, left - 6, y + 4, e);
    out << buf;
  }
  for (int i = 0; i <= 5; ++i) {
    const double t = tmax * i / 5.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.3g</text>\n", X(t),
                  top + ph + 18, t);
    out << buf;
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">wall-clock time (s)</text>\n";
  out << "<text transform=\"translate(20," << top + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">F(w) - F(w*) (log scale)</text>\n";
  if (switch_seconds) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\" stroke-dasharray=\"5,4\"/>"
                  "<text x=\"%g\" y=\"%g\">switch</text>\n",
                  X(*switch_seconds), top, X(*switch_seconds), top + ph, X(*switch_seconds) + 4, top + 14);
    out << buf;
  }
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = colors[i % 10];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : curves[i].mean) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(p.seconds), Y(p.suboptimality));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\">",
                  left + pw + 12, ly, left + pw + 36, ly, color, left + pw + 42, ly + 4);
    out << buf << curves[i].solver << "</text>\n";
  }
  out << "</svg>\n";
}

/// Mean wall-clock of the first evaluation after the switch, over all curves.
inline std::optional<double> switch_time(const experiment_result& r) {
  if (!r.switch_index) return std::nullopt;
  std::vector<double> t;
  for (const auto& c : r.curves)
    for (const auto& p : c.mean)
      if (p.samples > *r.switch_index) {
        t.push_back(p.seconds);
        break;
      }
  return t.empty() ? std::nullopt : std::optional<double>(mean_of(t));
}

/// Write <output_dir>/<id>.csv and <output_dir>/<id>.svg; returns the CSV path.
inline std::filesystem::path write_artifacts(const experiment_result& r) {
  const std::filesystem::path dir(r.config.output_dir);
  std::filesystem::create_directories(dir);
  const auto csv = dir / (r.config.id + ".csv");
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw error("cannot write " + csv.string());
    write_csv(out, r.curves);
  }
  {
    std::ofstream out(dir / (r.config.id + ".svg"), std::ios::binary);
    if (!out) throw error("cannot write svg next to " + csv.string());
    write_svg(out, r.curves, r.config.id + " (" + to_string(r.config.kind) + ")", switch_time(r));
  }
  return csv;
}

}  // namespace osdca::bench

#endif  // OSDCA_BENCH_HPP
