// Physical-regime calculators: spreading delay, mass thresholds, branch
// intervals, the quadratic-spreading diagnostic, energy drift, and the
// N-particle dephased event stream.
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <branchsim/errors.hpp>
#include <branchsim/physical.hpp>

namespace branchsim {
namespace {

PhysicalParams reference_proton() {
  PhysicalParams p;  // defaults: proton mass, w = 1e-7 m, rate 1e-16 / s
  return p;
}

TEST(Spreading, ReferenceProtonNumbers) {
  const PhysicalParams p = reference_proton();
  EXPECT_NEAR(p.t0(), 1.5860673431973577e-7, 1e-9 * 1.6e-7);
  EXPECT_DOUBLE_EQ(p.tau1(), 1e16);

  const SpreadingDelayResult r = spreading_delay(p);
  EXPECT_TRUE(r.rebranches);
  EXPECT_TRUE(r.asymptotic_valid);
  EXPECT_NEAR(r.delay_factor, 157.49459866655837, 1e-6);
  // Root of the level crossing, frozen from an independent bisection of
  // t/tau1 = ln 2 + 1.5 ln(1 + (t/t0)^2).
  EXPECT_NEAR(r.next_branch_time, 1.7365902713458703e+18, 1e18 * 1e-9);
  EXPECT_NEAR(r.cells_covered, 6.7670423529141636e+69, 6.8e69 * 1e-9);
  // The dilution minimum sits at ~3 tau1 (the t0 correction is negligible).
  EXPECT_NEAR(r.dilution_minimum_time, 3e16, 3e16 * 1e-6);
}

TEST(Spreading, RootActuallyCrossesThreshold) {
  const PhysicalParams p = reference_proton();
  const SpreadingDelayResult r = spreading_delay(p);
  EXPECT_NEAR(spreading_log_level(r.next_branch_time, r.t0, r.tau1), 0.0, 1e-9);
  // Just below the root the level is still under threshold.
  EXPECT_LT(spreading_log_level(0.99 * r.next_branch_time, r.t0, r.tau1), 0.0);
}

TEST(Spreading, FiniteHorizonReportsNoRebranch) {
  const SpreadingDelayResult r = spreading_delay(reference_proton(), 1e10);
  EXPECT_FALSE(r.rebranches);
  EXPECT_EQ(r.next_branch_time, std::numeric_limits<double>::infinity());
}

TEST(Spreading, HeavyObjectBranchesWithoutDelay) {
  PhysicalParams p = reference_proton();
  p.mass_kg = 1.0;  // t0 >> tau1: spreading never dilutes the level
  const SpreadingDelayResult r = spreading_delay(p);
  EXPECT_TRUE(r.rebranches);
  EXPECT_FALSE(r.asymptotic_valid);
  // With dilution negligible the crossing is the bare growth time tau1 ln 2.
  EXPECT_NEAR(r.next_branch_time, 1e16 * std::numbers::ln2, 1e16 * 1e-3);
}

TEST(Thresholds, MassScales) {
  PhysicalParams p = reference_proton();
  EXPECT_NEAR(mass_threshold(p), 1.054571817e-4, 1e-10);  // ~0.1 g
  p.rate_scaling = RateScaling::kProportionalToMass;
  EXPECT_NEAR(mass_threshold(p), 4.1998813332015456e-16, 1e-22);  // ~1e-13 g
}

TEST(Thresholds, BranchIntervalAtTenthGram) {
  PhysicalParams p = reference_proton();
  p.rate_scaling = RateScaling::kProportionalToMass;
  const double dt = branch_interval(p, 1e-4);
  EXPECT_NEAR(dt, 1e16 * (kProtonMassKg / 1e-4) * std::numbers::ln2, 1e-12);
  EXPECT_LT(dt, 1e-6);
  // Mass-independent rate: the interval is tau1 ln 2 regardless of the object.
  p.rate_scaling = RateScaling::kMassIndependent;
  EXPECT_DOUBLE_EQ(branch_interval(p, 1e-4), 1e16 * std::numbers::ln2);
  EXPECT_THROW(branch_interval(p, 0.0), ConfigError);
}

TEST(QuadraticSpread, CurvatureRatio) {
  EXPECT_DOUBLE_EQ(quadratic_spread_ratio(2.0, 4.0), 0.75);
  EXPECT_DOUBLE_EQ(quadratic_spread_ratio(0.0, 1.0), 0.0);
  EXPECT_THROW(quadratic_spread_ratio(1.0, 0.0), ConfigError);
}

TEST(EnergyDrift, CountWeightedVariance) {
  // Two equal-count branches at +-E: variance E^2.
  const double rate = energy_drift_rate(1e-45, {{1.0, 1e-20}, {1.0, -1e-20}});
  EXPECT_NEAR(rate, 1e-45 * 1e-40 / kHbar, 1e-60);
  // A single branch has zero variance: no drift.
  EXPECT_DOUBLE_EQ(energy_drift_rate(1e-45, {{5.0, 3.0}}), 0.0);
  EXPECT_THROW(energy_drift_rate(0.0, {{1.0, 1.0}}), ConfigError);
  EXPECT_THROW(energy_drift_rate(1e-45, {}), ConfigError);
  EXPECT_THROW(energy_drift_rate(1e-45, {{-1.0, 1.0}}), ConfigError);
}

TEST(Multiparticle, SingleParticleAtSymmetricSplitTicksUniformly) {
  const SplitParameter sp = make_split_parameter(0.5);
  const double T = std::numbers::ln2;
  const MultiparticleStream s = multiparticle_stream(1, sp, 1.0, 7, 40.0);
  ASSERT_GE(s.events.size(), 50u);
  for (std::size_t i = 1; i < s.events.size(); ++i)
    EXPECT_NEAR(s.events[i] - s.events[i - 1], T, 1e-12);
}

TEST(Multiparticle, MergedRateScalesWithParticleNumber) {
  const SplitParameter sp = make_split_parameter(0.5);
  const double T = std::numbers::ln2;
  for (const int n : {10, 100}) {
    const double horizon = horizon_for_events(n, sp, 1.0, 10000);
    const MultiparticleStream s = multiparticle_stream(n, sp, 1.0, 20260815, horizon);
    EXPECT_GE(s.events.size(), 10000u);
    EXPECT_NEAR(s.mean_interval, T / n, 0.05 * T / n) << "n=" << n;
    for (std::size_t i = 1; i < s.events.size(); ++i)
      ASSERT_LE(s.events[i - 1], s.events[i]);
  }
}

TEST(Multiparticle, DeterministicForAGivenSeed) {
  const SplitParameter sp = golden_split();
  const MultiparticleStream a = multiparticle_stream(13, sp, 2.0, 99, 50.0);
  const MultiparticleStream b = multiparticle_stream(13, sp, 2.0, 99, 50.0);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i)
    EXPECT_EQ(a.events[i], b.events[i]);  // bit-identical, not merely close
  const MultiparticleStream c = multiparticle_stream(13, sp, 2.0, 100, 50.0);
  EXPECT_NE(a.events, c.events);
}

TEST(Multiparticle, InputValidation) {
  const SplitParameter sp = make_split_parameter(0.5);
  EXPECT_THROW(multiparticle_stream(0, sp, 1.0, 1, 10.0), ConfigError);
  EXPECT_THROW(multiparticle_stream(1, sp, -1.0, 1, 10.0), ConfigError);
  EXPECT_THROW(multiparticle_stream(1, sp, 1.0, 1, 0.0), ConfigError);
}

}  // namespace
}  // namespace branchsim
