// Log-domain arithmetic, split-parameter classification, and branch times.
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <branchsim/measure.hpp>

namespace branchsim {
namespace {

TEST(LogMeasure, RoundTripAndZero) {
  EXPECT_DOUBLE_EQ(LogMeasure::from_linear(0.25).linear(), 0.25);
  EXPECT_EQ(LogMeasure::from_linear(0.0).value, kLogZero);
  EXPECT_THROW(LogMeasure::from_linear(-1.0), std::domain_error);
}

TEST(LogAdd, MatchesDirectSum) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-30.0, 0.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    const double expect = std::log(std::exp(a) + std::exp(b));
    EXPECT_NEAR(log_add(a, b), expect, 1e-12);
    EXPECT_DOUBLE_EQ(log_add(a, b), log_add(b, a));
  }
}

TEST(LogAdd, ZeroIdentityAndHugeGap) {
  EXPECT_DOUBLE_EQ(log_add(kLogZero, -3.5), -3.5);
  EXPECT_DOUBLE_EQ(log_add(-3.5, kLogZero), -3.5);
  EXPECT_EQ(log_add(kLogZero, kLogZero), kLogZero);
  // The smaller term is below double resolution; the sum must be the larger.
  EXPECT_DOUBLE_EQ(log_add(0.0, -800.0), 0.0);
  // Far outside the naive exp range.
  EXPECT_NEAR(log_add(1000.0, 1000.0), 1000.0 + std::numbers::ln2, 1e-12);
}

TEST(LogSumExp, MatchesDirectSumAndPermutation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, -0.5);
  std::vector<double> terms(257);
  double direct = 0.0;
  for (double& t : terms) {
    t = u(rng);
    direct += std::exp(t);
  }
  const double got = log_sum_exp(terms);
  EXPECT_NEAR(got, std::log(direct), 1e-12);
  std::shuffle(terms.begin(), terms.end(), rng);
  EXPECT_NEAR(log_sum_exp(terms), got, 1e-13);
}

TEST(LogSumExp, EmptyAndAllZero) {
  EXPECT_EQ(log_sum_exp({}), kLogZero);
  const std::vector<double> zeros{kLogZero, kLogZero};
  EXPECT_EQ(log_sum_exp(zeros), kLogZero);
}

TEST(SplitParameter, SymmetricHalf) {
  const SplitParameter sp = make_split_parameter(0.5);
  EXPECT_DOUBLE_EQ(sp.log_z, -std::numbers::ln2);
  EXPECT_DOUBLE_EQ(sp.log_one_minus_z, -std::numbers::ln2);
  EXPECT_DOUBLE_EQ(sp.ratio, 1.0);
  ASSERT_EQ(sp.ratio_class.kind, RatioClass::kRational);
  EXPECT_EQ(sp.ratio_class.num, 1);
  EXPECT_EQ(sp.ratio_class.den, 1);
}

TEST(SplitParameter, RatioTwoRoot) {
  // z = (3 - sqrt 5)/2 solves ln z = 2 ln(1-z), i.e. z = (1-z)^2.
  const double z = 0.5 * (3.0 - std::sqrt(5.0));
  const SplitParameter sp = make_split_parameter(z);
  EXPECT_NEAR(sp.ratio, 2.0, 1e-12);
  ASSERT_EQ(sp.ratio_class.kind, RatioClass::kRational);
  EXPECT_EQ(sp.ratio_class.num, 2);
  EXPECT_EQ(sp.ratio_class.den, 1);
}

TEST(SplitParameter, QuarterRatioValueAndNoSmallRational) {
  const SplitParameter sp = make_split_parameter(0.25);
  EXPECT_NEAR(sp.ratio, std::log(4.0) / std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(sp.ratio, 4.8188416793064182, 1e-12);
  // The true ratio is irrational; whatever the classifier decides about the
  // stored double, it must never claim a small-denominator rational.
  if (sp.ratio_class.kind == RatioClass::kRational) {
    EXPECT_GT(sp.ratio_class.den, 1000);
  }
}

TEST(SplitParameter, RangeChecks) {
  EXPECT_THROW(make_split_parameter(0.0), std::domain_error);
  EXPECT_THROW(make_split_parameter(1.0), std::domain_error);
  EXPECT_THROW(make_split_parameter(-0.2), std::domain_error);
  EXPECT_THROW(make_split_parameter(0.5, 0.0), std::domain_error);
}

TEST(GoldenSplit, SolvesTheLogRatioEquation) {
  const SplitParameter sp = golden_split();
  EXPECT_NEAR(sp.ratio, std::numbers::phi, 1e-12);
  EXPECT_NEAR(std::log(sp.z) - std::numbers::phi * std::log1p(-sp.z), 0.0, 1e-12);
  EXPECT_LT(sp.z, 0.5);
  EXPECT_GT(sp.z, 0.41);
  EXPECT_EQ(sp.ratio_class.kind, RatioClass::kIrrational);
  EXPECT_NEAR(sp.z, 0.4173149921443875, 1e-12);
}

TEST(ClassMeasure, ExponentArithmetic) {
  const SplitParameter sp = make_split_parameter(0.3);
  const LogMeasure m0 = LogMeasure::from_linear(0.8);
  const LogMeasure m = class_measure({0, 2, 3}, m0, sp);
  EXPECT_NEAR(m.value, std::log(0.8) + 2.0 * std::log(0.3) + 3.0 * std::log(0.7), 1e-12);
}

TEST(BranchTime, InvertsTheGrowthLaw) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> um(0.01, 0.99), ug(0.1, 1.0), ut(0.5, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double m = um(rng), g = ug(rng) / m, tau = ut(rng);
    if (m * g > 1.0) continue;
    const double t = branch_time(LogMeasure::from_linear(m), g, tau);
    EXPECT_NEAR(m * g * std::exp(t / tau), 1.0, 1e-9);
  }
}

TEST(BranchTime, EdgeCases) {
  // Exactly at threshold: fires now.
  EXPECT_DOUBLE_EQ(branch_time(LogMeasure::from_linear(1.0), 1.0, 2.0), 0.0);
  // Above threshold is a configuration error.
  EXPECT_THROW(branch_time(LogMeasure::from_linear(0.9), 2.0, 1.0), std::domain_error);
  EXPECT_THROW(branch_time(LogMeasure::from_linear(0.5), -1.0, 1.0), std::domain_error);
  // Measure zero never fires.
  EXPECT_EQ(branch_time(LogMeasure{}, 1.0, 1.0),
            std::numeric_limits<double>::infinity());
}

TEST(ClassKey, OrderingAndHashSpread) {
  EXPECT_LT((ClassKey{0, 0, 1}), (ClassKey{0, 1, 0}));
  EXPECT_LT((ClassKey{0, 1, 5}), (ClassKey{1, 0, 0}));
  ClassKeyHash h;
  EXPECT_NE(h({0, 1, 0}), h({0, 0, 1}));
  EXPECT_NE(h({1, 0, 0}), h({0, 1, 0}));
}

}  // namespace
}  // namespace branchsim
