#include "osdca/schedules.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace osdca;

TEST(Schedule, PowerValues) {
  const auto k2 = sample_schedule::power(2.0);
  EXPECT_EQ(k2.size(1), 1u);
  EXPECT_EQ(k2.size(2), 4u);
  EXPECT_EQ(k2.size(10), 100u);
  const auto k3 = sample_schedule::power(3.0, 2);
  EXPECT_EQ(k3.size(5), 250u);
  // ceil(1 * 4^1.5) = 8, ceil(3^1.5) = ceil(5.196...) = 6
  const auto k15 = sample_schedule::power(1.5);
  EXPECT_EQ(k15.size(4), 8u);
  EXPECT_EQ(k15.size(3), 6u);
}

TEST(Schedule, NondecreasingAndAtLeastOne) {
  for (double p : {0.3, 1.0, 1.7, 2.0, 3.0}) {
    const auto s = sample_schedule::power(p);
    std::uint64_t prev = 0;
    for (std::uint64_t k = 1; k < 2000; ++k) {
      const auto n = s.size(k);
      EXPECT_GE(n, 1u);
      EXPECT_GE(n, prev);
      prev = n;
    }
  }
}

TEST(Schedule, CapClips) {
  sample_schedule s = sample_schedule::power(2.0);
  s.cap = 50;
  EXPECT_EQ(s.size(7), 49u);
  EXPECT_EQ(s.size(8), 50u);
  EXPECT_EQ(s.size(1000), 50u);
}

TEST(Schedule, OverflowIsReported) {
  const auto s = sample_schedule::power(3.0);
  EXPECT_NO_THROW(s.size(200000));
  EXPECT_THROW(s.size(300000), schedule_overflow);
  EXPECT_THROW(sample_schedule::power(2.5).size(std::uint64_t{1} << 30), schedule_overflow);
}

TEST(Schedule, ZeroIndexRejected) { EXPECT_THROW(sample_schedule::power(2.0).size(0), error); }

TEST(Validate, SummabilityCondition) {
  EXPECT_EQ(validate_schedule(sample_schedule::power(2.0), 1.0), schedule_validity::valid);
  EXPECT_EQ(validate_schedule(sample_schedule::power(3.0), 0.45), schedule_validity::valid);
  EXPECT_EQ(validate_schedule(sample_schedule::power(1.0), 1.0), schedule_validity::divergent);
  EXPECT_EQ(validate_schedule(sample_schedule::power(2.0), 0.45), schedule_validity::divergent);
  // The boundary p * beta = 1 is the harmonic series.
  EXPECT_EQ(validate_schedule(sample_schedule::power(2.0), 0.5), schedule_validity::divergent);
}

TEST(Validate, CappedScheduleIsFiniteData) {
  sample_schedule s = sample_schedule::power(2.0);
  s.cap = 1000;
  EXPECT_EQ(validate_schedule(s, 1.0), schedule_validity::finite_data);
}

TEST(Validate, BetaRange) {
  EXPECT_THROW(validate_schedule(sample_schedule::power(2.0), 0.0), error);
  EXPECT_THROW(validate_schedule(sample_schedule::power(2.0), 1.5), error);
}

TEST(Validate, PartialSumsAgreeWithVerdict) {
  // Independent check: partial sums of n_k^-beta stabilise iff the validator accepts.
  auto tail = [](double p, double beta) {
    const auto s = sample_schedule::power(p);
    double a = 0.0, b = 0.0;
    for (std::uint64_t k = 1; k <= 20000; ++k) {
      const double term = std::pow(static_cast<double>(s.size(k)), -beta);
      (k <= 10000 ? a : b) += term;
    }
    return b / a;
  };
  EXPECT_LT(tail(2.0, 1.0), 1e-3);
  EXPECT_LT(tail(3.0, 0.45), 0.01);
  EXPECT_GT(tail(1.0, 1.0), 0.05);
  EXPECT_GT(tail(2.0, 0.45), 0.05);
}

TEST(Rademacher, HolderInWCase) {
  const double inv = 1.0 / std::sqrt(0.5 * std::numbers::e);
  // M = L = gamma = 1, D = 2, m = 1, alpha = 1/4:  L D^g m^(g/2) = 2, second term 1 / sqrt(0.5 e).
  const auto r = rademacher_holder_in_w(1, 1, 1, 2, 1, 0.25);
  EXPECT_NEAR(r.N_g, 2.0 + inv, 1e-12);
  EXPECT_NEAR(r.N_g, 2.857763, 1e-6);
  EXPECT_EQ(r.alpha, 0.25);
  EXPECT_FALSE(r.impractical);
  // L = 0 leaves the second term.
  EXPECT_NEAR(rademacher_holder_in_w(1, 0, 1, 1, 1, 0.25).N_g, inv, 1e-12);
  // m = 4 doubles the sqrt(m) factor.
  EXPECT_NEAR(rademacher_holder_in_w(1, 0, 1, 1, 4, 0.25).N_g, 2.0 * inv, 1e-12);
  EXPECT_THROW(rademacher_holder_in_w(1, 1, 1, 1, 1, 0.5), error);
  EXPECT_TRUE(rademacher_holder_in_w(1, 1, 1, 1, 1, 0.05).impractical);
}

TEST(Rademacher, HolderInZCase) {
  // M = L = D = gamma = 1, n = 2:  N = M + L D^g n^(g/2) = 1 + sqrt(2), alpha = 1/(2 + 2).
  const auto r = rademacher_holder_in_z(1, 1, 1, 1, 2);
  EXPECT_NEAR(r.N_g, 1.0 + std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.alpha, 0.25, 1e-15);
  EXPECT_NEAR(rademacher_holder_in_z(3, 0, 1, 1, 2).N_g, 3.0, 1e-12);
  // n = 100, gamma = 1: alpha = 1/102.
  const auto high = rademacher_holder_in_z(1, 1, 1, 1, 100);
  EXPECT_NEAR(high.alpha, 1.0 / 102.0, 1e-15);
  EXPECT_TRUE(high.impractical);
}

TEST(Rademacher, DiscreteCase) {
  EXPECT_NEAR(rademacher_discrete(1.0, 4, 16), 0.5, 1e-12);
  EXPECT_NEAR(rademacher_discrete(1.0, 1, 1), 1.0, 1e-12);
  EXPECT_NEAR(rademacher_discrete(2.0, 9, 9), 2.0, 1e-12);
  for (std::uint64_t j = 1; j < 50; ++j)
    EXPECT_EQ(rademacher_discrete(1.0, 7, 4 * j), rademacher_discrete(1.0, 7, j) / 2);
  const auto b = rademacher_discrete_bound(2.0, 100);
  EXPECT_NEAR(b.N_g, 20.0, 1e-12);
  EXPECT_EQ(b.alpha, 0.5);
}

TEST(Validate, MonotoneInExponent) {
  for (double beta : {0.1, 0.3, 0.45, 0.5, 0.9, 1.0})
    for (double p = 0.5; p < 12; p += 0.25) {
      if (validate_schedule(sample_schedule::power(p), beta) != schedule_validity::valid) continue;
      for (double q = p; q < 12; q += 0.25)
        EXPECT_EQ(validate_schedule(sample_schedule::power(q), beta), schedule_validity::valid);
    }
}

TEST(Schedule, ExactCeilUpToMillion) {
  const auto s = sample_schedule::power(2.0, 3);
  for (std::uint64_t k = 1; k <= 1000000; k += 997) EXPECT_EQ(s.size(k), 3 * k * k);
}

TEST(Schedule, ParseShorthand) {
  EXPECT_EQ(parse_schedule("k2")->exponent, 2.0);
  EXPECT_EQ(parse_schedule("k1.5")->exponent, 1.5);
  EXPECT_EQ(parse_schedule("4k3")->base, 4u);
  EXPECT_FALSE(parse_schedule("k").has_value());
  EXPECT_FALSE(parse_schedule("2").has_value());
  EXPECT_FALSE(parse_schedule("k-1").has_value());
  EXPECT_FALSE(parse_schedule("xk2").has_value());
  EXPECT_FALSE(parse_schedule("k2x").has_value());
}
