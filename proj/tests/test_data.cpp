#include "osdca/data.hpp"
#include "osdca/epca.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace osdca;

namespace {

dataset parse(const std::string& text, std::optional<index_t> hint = std::nullopt) {
  std::istringstream in(text);
  return parse_libsvm(in, hint);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const data_error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Libsvm, DropsLabelAndFillsZeros) {
  const dataset ds = parse("3 1:0.6 2:0.8\n", 2);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.dimension, 2);
  EXPECT_EQ(ds.samples[0][0], 0.6);
  EXPECT_EQ(ds.samples[0][1], 0.8);

  const dataset sparse = parse("1 2:5\n-1 4:1e-3\t\n");
  EXPECT_EQ(sparse.dimension, 4);
  EXPECT_EQ(sparse.samples[0], (vector(4) << 0, 5, 0, 0).finished());
  EXPECT_EQ(sparse.samples[1], (vector(4) << 0, 0, 0, 1e-3).finished());
}

TEST(Libsvm, KeepsLabelsOnRequest) {
  std::istringstream in("2 1:1\n7 1:2\n");
  const dataset ds = parse_libsvm(in, std::nullopt, true);
  EXPECT_EQ(ds.labels, (std::vector<double>{2, 7}));
}

TEST(Libsvm, HintPadsShortRows) {
  const dataset ds = parse("0 1:1\n", 3);
  EXPECT_EQ(ds.dimension, 3);
  EXPECT_EQ(ds.samples[0].size(), 3);
}

TEST(Libsvm, Errors) {
  EXPECT_NE(parse_error("").find("no samples"), std::string::npos);
  EXPECT_NE(parse_error("1 1:1\n1 2:1 1:3\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("1 0:1\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse_error("1 1:x\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse_error("1 1:1\n\n1 a:2\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error("abc 1:1\n").find("line 1"), std::string::npos);
  EXPECT_THROW(parse("1 5:1\n", 3), data_error);
}

TEST(Libsvm, RoundTripIsExact) {
  normal_source normal(4);
  dataset ds;
  ds.dimension = 6;
  for (int i = 0; i < 50; ++i) {
    vector z = normal.draw(6);
    z[i % 6] = 0.0;
    ds.samples.push_back(z);
  }
  std::stringstream buf;
  write_libsvm(buf, ds);
  const dataset back = parse_libsvm(buf, 6);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.samples[i], ds.samples[i]);
}

TEST(Cache, BinaryRoundTripIsBitExact) {
  const dataset ds = gen_gaussian(5, {{3, 2, 1, 1, 1}, 9}, 100, 1);
  std::stringstream buf;
  write_cache(buf, ds);
  const dataset back = read_cache(buf);
  EXPECT_EQ(back.dimension, 5);
  ASSERT_EQ(back.size(), 100u);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.samples[i], ds.samples[i]);
}

TEST(Cache, RejectsGarbage) {
  std::stringstream buf("not a cache file at all");
  EXPECT_THROW(read_cache(buf), data_error);
}

TEST(Cache, LoadDatasetDetectsFormat) {
  const auto dir = std::filesystem::temp_directory_path() / "osdca_test_cache";
  std::filesystem::create_directories(dir);
  const dataset ds = gen_gaussian(3, {{2, 1, 1}, 2}, 10, 3);
  {
    std::ofstream bin(dir / "d.bin", std::ios::binary);
    write_cache(bin, ds);
    std::ofstream txt(dir / "d.svm");
    write_libsvm(txt, ds);
  }
  const dataset a = load_dataset((dir / "d.bin").string());
  const dataset b = load_dataset((dir / "d.svm").string(), 3);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(a.samples[i], ds.samples[i]);
    EXPECT_EQ(b.samples[i], ds.samples[i]);
  }
  EXPECT_THROW(load_dataset((dir / "missing.svm").string()), data_error);
  std::filesystem::remove_all(dir);
}

TEST(Normalize, ScalesToUnitNorm) {
  dataset ds = parse("0 1:3 2:4\n0 1:1\n");
  ds = normalize_unit(std::move(ds));
  EXPECT_TRUE(ds.origin.normalized);
  EXPECT_NEAR(ds.samples[0][0], 0.6, 1e-16);
  EXPECT_NEAR(ds.samples[0][1], 0.8, 1e-16);
  EXPECT_EQ(ds.samples[1][0], 1.0);
}

TEST(Normalize, ZeroSampleNamesIndex) {
  dataset ds;
  ds.dimension = 2;
  ds.samples = {vector::Ones(2), vector::Zero(2)};
  try {
    normalize_unit(ds);
    FAIL();
  } catch (const data_error& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
}

TEST(Shuffle, DeterministicPermutation) {
  dataset ds;
  ds.dimension = 1;
  for (int i = 0; i < 1000; ++i) ds.samples.push_back(vector::Constant(1, i));
  const dataset a = shuffle(ds, 5), b = shuffle(ds, 5), c = shuffle(ds, 6);
  bool differs = false;
  std::multiset<double> ms;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(a.samples[i], b.samples[i]);
    differs |= a.samples[i] != c.samples[i];
    ms.insert(a.samples[i][0]);
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(ms.size(), 1000u);
  EXPECT_EQ(*ms.begin(), 0.0);
  EXPECT_EQ(*ms.rbegin(), 999.0);
  EXPECT_EQ(a.origin.shuffle_seed, 5u);

  dataset one;
  one.dimension = 1;
  one.samples = {vector::Constant(1, 3)};
  EXPECT_EQ(shuffle(one, 9).samples[0][0], 3.0);
}

TEST(Stream, BatchSizesFollowSchedule) {
  dataset ds;
  ds.dimension = 1;
  for (int i = 0; i < 10; ++i) ds.samples.push_back(vector::Constant(1, i));
  auto stream = stream_batches(ds, sample_schedule::power(2.0));
  std::vector<std::size_t> sizes;
  std::vector<double> seen;
  for (auto b = stream.next(); !b.empty(); b = stream.next()) {
    sizes.push_back(b.size());
    for (const auto& z : b) seen.push_back(z[0]);
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{1, 4, 5}));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(seen[i], i);

  dataset one;
  one.dimension = 1;
  one.samples = {vector::Zero(1)};
  auto s1 = stream_batches(one, sample_schedule::power(2.0));
  EXPECT_EQ(s1.next().size(), 1u);
  EXPECT_TRUE(s1.next().empty());
}

TEST(Stream, LetterSizedPartition) {
  dataset ds;
  ds.dimension = 1;
  ds.samples.assign(15000, vector::Zero(1));
  auto stream = stream_batches(ds, sample_schedule::power(2.0));
  std::vector<std::size_t> sizes;
  for (auto b = stream.next(); !b.empty(); b = stream.next()) sizes.push_back(b.size());
  ASSERT_EQ(sizes.size(), 36u);
  EXPECT_EQ(sizes[34], 35u * 35u);
  EXPECT_EQ(sizes.back(), 90u);
  EXPECT_EQ(stream.consumed(), 15000u);
}

TEST(Stream, IidSourceNeverExhausts) {
  const dataset ds = gen_gaussian(2, {{1, 1}, 0}, 5, 0);
  iid_source src(ds, 3);
  EXPECT_EQ(src.take(100).size(), 100u);
  EXPECT_EQ(src.take(7).size(), 7u);
  EXPECT_EQ(src.consumed(), 107u);
}

TEST(Gaussian, IsotropicSecondMoment) {
  const dataset ds = gen_gaussian(2, {{1, 1}, 0}, 20000, 8);
  const matrix m = epca::second_moment(ds.view());
  EXPECT_NEAR(m(0, 0), 0.5, 0.02);
  EXPECT_NEAR(m(1, 1), 0.5, 0.02);
  EXPECT_NEAR(m(0, 1), 0.0, 0.02);
  for (const auto& z : ds.samples) EXPECT_NEAR(z.norm(), 1.0, 1e-12);
}

TEST(Gaussian, PlantedDirectionRecovered) {
  std::vector<double> ev(20, 1.0);
  ev[0] = 9.0;
  const covariance_spec cov{ev, 31};
  const dataset ds = gen_gaussian(20, cov, 100000, 2);
  const auto eig = epca::top_eigenvector(ds.view());
  EXPECT_GE(std::abs(eig.v.dot(cov.top_direction())), 0.97);
}

TEST(Gaussian, ReproducibleAndValidated) {
  const covariance_spec cov{{4, 1, 1}, 3};
  const dataset a = gen_gaussian(3, cov, 50, 9), b = gen_gaussian(3, cov, 50, 9);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a.samples[i], b.samples[i]);
  EXPECT_THROW(gen_gaussian(3, cov, 0, 9), data_error);
  EXPECT_THROW(gen_gaussian(3, covariance_spec{{1, 0, 1}, 0}, 5, 9), error);
  const matrix q = cov.basis();
  EXPECT_LE((q.transpose() * q - matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(Gaussian, StreamingSourceMatchesBatchGenerator) {
  const covariance_spec cov{{4, 2, 1}, 5};
  const dataset ds = gen_gaussian(3, cov, 30, 77);
  gaussian_source src(cov, 30, 77);
  std::vector<vector> got;
  for (auto b = src.take(7); !b.empty(); b = src.take(7)) got.insert(got.end(), b.begin(), b.end());
  ASSERT_EQ(got.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(got[i], ds.samples[i]);
}

namespace {
shift_stream_spec desk_shift(std::size_t switch_index, std::size_t total) {
  std::vector<double> a(50, 1.0), b(50, 1.0);
  a[0] = 100.0;
  a[1] = 2.0;
  b[0] = 100.0;
  b[1] = 2.0;
  return {50, {a, 101}, {b, 202}, switch_index, total, 2000, 2000, 5};
}
}  // namespace

TEST(Shift, DegenerateSwitchMatchesSinglePhase) {
  const auto spec = desk_shift(300, 300);
  const shift_data d = gen_shift_stream(spec);
  const dataset a = gen_gaussian(50, spec.covariance_a, 300, split_seed(spec.seed, 11));
  ASSERT_EQ(d.training.size(), 300u);
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(d.training.samples[i], a.samples[i]);
}

TEST(Shift, TopDirectionsDiffer) {
  const shift_data d = gen_shift_stream(desk_shift(10000, 20000));
  EXPECT_EQ(d.training.size(), 20000u);
  const auto ea = epca::top_eigenvector(d.validation_a.view());
  const auto eb = epca::top_eigenvector(d.validation_b.view());
  EXPECT_LE(std::abs(ea.v.dot(eb.v)), 0.5);
}

TEST(Shift, InvalidSpecRejected) {
  auto spec = desk_shift(0, 10);
  EXPECT_THROW(gen_shift_stream(spec), error);
  spec = desk_shift(20, 10);
  EXPECT_THROW(gen_shift_stream(spec), error);
}
