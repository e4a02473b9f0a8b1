#include "osdca/bench.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace osdca;
using namespace osdca::bench;

namespace {

vector vec(std::initializer_list<double> xs) {
  vector v(static_cast<index_t>(xs.size()));
  index_t i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

json small_gaussian(const std::string& extra_solvers = "") {
  return json::parse(R"({
    "experiment": "compare-solvers",
    "id": "tiny",
    "runs": 3,
    "master_seed": 5,
    "threads": 2,
    "data": {"generator": "gaussian", "dimension": 4,
             "covariance": {"leading": [6, 2], "fill": 1, "basis_seed": 3},
             "train_count": 800, "validation_count": 400, "seed": 9},
    "solvers": [
      {"variant": "osdca-exact-g", "label": "osdca-1", "lambda": 1, "schedule": "k2"},
      {"variant": "pss-constant", "label": "pss", "cadence": 50}
      )" + extra_solvers + R"(
    ]
  })");
}

std::string csv_of(const experiment_result& r) {
  std::ostringstream out;
  write_csv(out, r.curves);
  return out.str();
}

suboptimality_curve flat_curve(const std::string& exp, double terminal, double seconds) {
  suboptimality_curve c;
  c.experiment = exp;
  c.solver = "s";
  run_result r;
  r.points.push_back({0, 0, 0.0, 0.0, 1.0});
  r.points.push_back({1, 1, seconds, 0.0, terminal});
  c.runs = {r, r};
  c.mean = mean_curve(c.runs);
  return c;
}

}  // namespace

TEST(WStar, TwoToOneMoment) {
  const std::vector<vector> v{vec({1, 0}), vec({1, 0}), vec({0, 1})};
  const w_star_result r = compute_w_star(v);
  EXPECT_NEAR(r.F_star, -1.0 / 3.0, 1e-10);
  EXPECT_NEAR(std::abs(r.w_star[0]), 1.0, 1e-8);
  EXPECT_TRUE(r.agrees);
  EXPECT_FALSE(r.degenerate());
}

TEST(WStar, SingleSample) {
  const std::vector<vector> v{vec({1, 0})};
  const w_star_result r = compute_w_star(v);
  EXPECT_NEAR(r.F_star, -0.5, 1e-10);
  EXPECT_TRUE(r.agrees);
}

TEST(WStar, IsotropicIsDegenerate) {
  const std::vector<vector> v{vec({1, 0}), vec({0, 1})};
  EXPECT_TRUE(compute_w_star(v).degenerate());
}

TEST(WStar, EmptyThrows) { EXPECT_THROW(compute_w_star(sample_span{}), data_error); }

TEST(Gap, HandValues) {
  const auto a = flat_curve("e", 1e-3, 2.0);
  const auto b = flat_curve("e", 3e-3, 5.0);
  const gap_summary g = summarize_gap(a, b);
  EXPECT_NEAR(g.terminal_gap, 2e-3, 1e-15);
  EXPECT_NEAR(g.time_ratio, 2.5, 1e-15);
  EXPECT_EQ(summarize_gap(a, a).terminal_gap, 0.0);
  EXPECT_EQ(summarize_gap(a, a).time_ratio, 1.0);
}

TEST(Gap, DifferentExperimentsThrow) {
  EXPECT_THROW(summarize_gap(flat_curve("e", 1, 1), flat_curve("f", 1, 1)), error);
}

TEST(MeanCurve, AveragesByIndexOverRunsThatReachIt) {
  run_result a, b;
  a.points = {{0, 0, 0.0, -1, 2}, {1, 1, 1.0, -2, 1}};
  b.points = {{0, 0, 0.0, -1, 4}};
  const auto m = mean_curve({a, b});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].suboptimality, 3.0);
  EXPECT_EQ(m[1].suboptimality, 1.0);
}

TEST(Config, ParsesAndDefaults) {
  const experiment_config c = parse_experiment_config(small_gaussian());
  EXPECT_EQ(c.id, "tiny");
  EXPECT_EQ(c.kind, experiment_kind::compare_solvers);
  EXPECT_EQ(c.n_runs, 3u);
  ASSERT_EQ(c.solvers.size(), 2u);
  EXPECT_EQ(c.solvers[0].effective_cadence(), 1u);
  EXPECT_EQ(c.solvers[1].effective_cadence(), 50u);
  EXPECT_EQ(c.solvers[0].config.schedule.exponent, 2.0);
  const auto& g = std::get<gaussian_data>(c.data);
  EXPECT_EQ(g.covariance.eigenvalues, (std::vector<double>{6, 2, 1, 1}));
  EXPECT_EQ(c.output_dir, "results/tiny");
}

TEST(Config, PssDefaultsToCadence100) {
  json j = small_gaussian();
  j["solvers"][1].erase("cadence");
  EXPECT_EQ(parse_experiment_config(j).solvers[1].effective_cadence(), 100u);
}

TEST(Config, ErrorsNameTheField) {
  auto message = [](json j) {
    try {
      parse_experiment_config(j);
    } catch (const config_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  json j = small_gaussian();
  j["solvers"][0]["variant"] = "sgd";
  EXPECT_NE(message(j).find("solvers[0].variant"), std::string::npos);
  j = small_gaussian();
  j["solvers"][1]["stepsize"] = -1;
  EXPECT_NE(message(j).find("solvers[1].stepsize"), std::string::npos);
  j = small_gaussian();
  j["data"]["covariance"]["leading"] = {1, 2, 3, 4, 5};
  EXPECT_NE(message(j).find("data.covariance.leading"), std::string::npos);
  j = small_gaussian();
  j["bogus"] = 1;
  EXPECT_NE(message(j).find("bogus: unknown field"), std::string::npos);
  j = small_gaussian();
  j["runs"] = "many";
  EXPECT_NE(message(j).find("runs"), std::string::npos);
  j = small_gaussian();
  j.erase("data");
  EXPECT_NE(message(j).find("data: required"), std::string::npos);
  j = small_gaussian(R"(, {"variant": "osdca-exact-g", "label": "x", "decomposition": 2})");
  EXPECT_NE(message(j).find("decomposition 1"), std::string::npos);
  j = small_gaussian(R"(, {"variant": "dca", "label": "pss"})");
  EXPECT_NE(message(j).find("duplicate label"), std::string::npos);
}

TEST(Config, LambdaSweepExpandsGrid) {
  json j = small_gaussian();
  j["experiment"] = "lambda-sweep";
  j["lambdas"] = {0, 0.1, 5};
  j["solvers"] = json::array({json{{"variant", "osdca-exact-g"}, {"label", "osdca-1"}}});
  const experiment_config c = parse_experiment_config(j);
  ASSERT_EQ(c.solvers.size(), 3u);
  EXPECT_EQ(c.solvers[0].d1.lambda, 0.0);
  EXPECT_TRUE(c.solvers[0].config.override_preconditions);
  EXPECT_FALSE(c.solvers[1].config.override_preconditions);
  EXPECT_EQ(c.solvers[2].label, "osdca-1 (lambda=5)");
}

TEST(Config, AdaptivityNeedsShiftStream) {
  json j = small_gaussian();
  j["experiment"] = "adaptivity";
  EXPECT_THROW(parse_experiment_config(j), config_error);
}

TEST(Config, ShippedConfigsParse) {
  const std::filesystem::path dir = std::filesystem::path(OSDCA_SOURCE_DIR) / "configs";
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_experiment_config(entry.path().string())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 4);
}

TEST(Experiment, RunsAndIsDeterministic) {
  const experiment_config c = parse_experiment_config(small_gaussian());
  const experiment_result a = run_experiment(c);
  ASSERT_EQ(a.curves.size(), 2u);
  for (const auto& curve : a.curves) {
    ASSERT_EQ(curve.runs.size(), 3u);
    for (const auto& run : curve.runs) {
      ASSERT_GE(run.points.size(), 2u);
      EXPECT_EQ(run.points.front().iteration, 0u);
      for (const auto& p : run.points) EXPECT_GE(p.suboptimality, -negative_suboptimality_tolerance);
    }
  }
  EXPECT_TRUE(a.truths[0].agrees);
  // All solvers start from the same point in a given run.
  EXPECT_EQ(a.curves[0].runs[1].points[0].objective, a.curves[1].runs[1].points[0].objective);
  EXPECT_NE(a.curves[0].runs[0].points[0].objective, a.curves[0].runs[1].points[0].objective);

  experiment_config single = c;
  single.threads = 1;
  const experiment_result b = run_experiment(single);
  EXPECT_EQ(canonicalize_csv(csv_of(a)), canonicalize_csv(csv_of(b)));
}

TEST(Experiment, DegenerateValidationThrows) {
  // Validation second moment exactly I/2.
  json j = small_gaussian();
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "osdca_bench_degenerate";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "train.txt") << "0 1:1\n0 2:1\n";
    std::ofstream(dir / "val.txt") << "0 1:1\n0 2:1\n";
  }
  j["data"] = json{{"train", (dir / "train.txt").string()}, {"validation", (dir / "val.txt").string()}};
  EXPECT_THROW(run_experiment(parse_experiment_config(j)), degenerate_error);
}

TEST(Csv, HeaderRowsAndCanonicalForm) {
  suboptimality_curve c = flat_curve("e", 0.25, 1.5);
  c.solver = "a,b";
  std::ostringstream out;
  write_csv(out, {c});
  const std::string text = out.str();
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, csv_header);
  std::getline(in, line);
  EXPECT_EQ(line, "e,\"a,b\",0,0,0,0,0,1");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);  // 2 runs x 2 points + 2 mean points
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const std::string canon = canonicalize_csv(text);
  EXPECT_EQ(canon.substr(0, canon.find('\n')), "experiment,solver,run,iter,samples,objective,suboptimality");
  EXPECT_NE(canon.find("e,\"a,b\",mean,1,1,0,0.25"), std::string::npos);
}

TEST(Svg, HasOnePolylinePerSolverAndLegend) {
  auto a = flat_curve("e", 1e-3, 2.0);
  auto b = flat_curve("e", 0.0, 3.0);
  a.solver = "first";
  b.solver = "second";
  std::ostringstream out;
  write_svg(out, {a, b}, "title", 1.0);
  const std::string s = out.str();
  std::size_t count = 0;
  for (std::size_t pos = 0; (pos = s.find("<polyline", pos)) != std::string::npos; ++pos) ++count;
  EXPECT_EQ(count, 2u);
  EXPECT_NE(s.find(">first<"), std::string::npos);
  EXPECT_NE(s.find(">second<"), std::string::npos);
  EXPECT_NE(s.find("switch"), std::string::npos);
  // Zero suboptimality is clipped to the floor rather than producing -inf.
  EXPECT_NE(s.find("1e-16"), std::string::npos);
  EXPECT_EQ(s.find("inf"), std::string::npos);
  EXPECT_EQ(s.find("nan"), std::string::npos);
}

TEST(Experiment, DcaOnTheValidationSetReachesItsOptimum) {
  const std::string val = std::string(OSDCA_TEST_DATA_DIR) + "/letter.scale.t";
  json j = {{"experiment", "compare-solvers"},
            {"runs", 1},
            {"data", {{"train", val}, {"validation", val}}},
            {"solvers", json::array({json{{"variant", "dca"}, {"cadence", 1}, {"stop_tolerance", 1e-10}}})}};
  const experiment_result r = run_experiment(parse_experiment_config(j));
  const auto& pts = r.curves[0].runs[0].points;
  ASSERT_GE(pts.size(), 3u);
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_LE(pts[i].objective, pts[i - 1].objective + 1e-12);
  EXPECT_LE(pts.back().suboptimality, 1e-10);
}
