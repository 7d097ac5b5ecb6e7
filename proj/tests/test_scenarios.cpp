// Scenario constructors: built-in initial states, validation, quantile
// placement, and the first-event bookkeeping.
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <branchsim/errors.hpp>
#include <branchsim/runner.hpp>
#include <branchsim/scenario.hpp>
#include <branchsim/stats.hpp>

namespace branchsim {
namespace {

TEST(Scenario, ValidationCatchesBrokenConfigs) {
  ScenarioConfig cfg;
  EXPECT_THROW(cfg.validate(), ConfigError);  // no components
  cfg.components = {{"A", {{1, 0.5}}}, {"B", {{1, 0.5}}}};
  cfg.horizon = 1.0;
  EXPECT_NO_THROW(cfg.validate());
  cfg.components[0].cells[0].m0 = 0.6;  // total measure 1.1
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.components[0].cells[0].m0 = 0.5;
  cfg.horizon = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.horizon = 1.0;
  cfg.z_preset = "fibonacci";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Scenario, NormalizeFirstEventSentinel) {
  ScenarioConfig cfg;
  cfg.components = {{"A", {{1, 0.625}}}, {"B", {{1, 0.375}}}};
  cfg.horizon = 1.0;
  cfg.g = 0.0;
  // The heaviest cell reaches threshold exactly at t = 0.
  EXPECT_DOUBLE_EQ(std::log(0.625) + cfg.log_g_effective(), 0.0);
  EXPECT_DOUBLE_EQ(first_event_time(cfg), 0.0);
}

TEST(Scenario, SymmetricPairLayout) {
  const ScenarioConfig cfg = build_symmetric_pair(6);
  EXPECT_EQ(cfg.components.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.components[0].cells[0].m0, 0.5);
  EXPECT_DOUBLE_EQ(cfg.g, 2.0);
  EXPECT_EQ(cfg.mode, RunMode::kExact);
  EXPECT_NEAR(cfg.total_measure(), 1.0, 1e-15);
  EXPECT_EQ(cfg.sample_times.size(), 6u);
  EXPECT_NO_THROW(cfg.validate());
  // Both families reach threshold together at t = 0.
  for (const auto& [fam, t] : family_first_events(cfg)) EXPECT_DOUBLE_EQ(t, 0.0);
  EXPECT_THROW(build_symmetric_pair(0), ConfigError);
}

TEST(Scenario, BiasedPairFirstEventsAreOneCycleApart) {
  const ScenarioConfig cfg = build_biased_pair(6);
  EXPECT_NO_THROW(cfg.validate());
  const auto firsts = family_first_events(cfg);
  ASSERT_EQ(firsts.size(), 2u);
  EXPECT_EQ(firsts[0].first, "A");
  EXPECT_NEAR(firsts[0].second, 0.0, 1e-12);
  EXPECT_NEAR(firsts[1].second, cfg.tau * std::numbers::ln2, 1e-12);
}

TEST(Scenario, StationaryQuantileInvertsTheCdf) {
  for (const double z : {0.3, golden_split().z, 0.5}) {
    const SplitParameter sp = make_split_parameter(z);
    for (double u = 0.0; u < 1.0; u += 0.01) {
      const double m = stationary_quantile(u, z);
      EXPECT_NEAR(stationary_cdf(m, sp), u, 1e-12) << "z=" << z << " u=" << u;
    }
    EXPECT_DOUBLE_EQ(stationary_quantile(0.0, z), std::min(z, 1.0 - z));
  }
  EXPECT_THROW(stationary_quantile(1.0, 0.5), std::domain_error);
}

TEST(Scenario, GoldenMeanStrataSitAtQuantiles) {
  const ScenarioConfig one = build_golden_mean(100.0, 1);
  ASSERT_EQ(one.components.size(), 1u);
  EXPECT_EQ(one.components[0].cells.size(), 1u);
  EXPECT_EQ(one.z_preset, "golden");
  EXPECT_NO_THROW(one.validate());

  const int strata = 9;
  const ScenarioConfig cfg = build_golden_mean(100.0, strata, 3);
  ASSERT_EQ(cfg.components[0].cells.size(), static_cast<std::size_t>(strata));
  EXPECT_NEAR(cfg.total_measure(), 1.0, 1e-12);
  EXPECT_EQ(cfg.seed, 3u);
  // Quantile placement makes the per-cell measures strictly increasing.
  for (std::size_t i = 1; i < cfg.components[0].cells.size(); ++i)
    EXPECT_GT(cfg.components[0].cells[i].m0, cfg.components[0].cells[i - 1].m0);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Scenario, GaussianPairUniformCellArithmetic) {
  const ScenarioConfig cfg = build_gaussian_pair();
  ASSERT_EQ(cfg.components.size(), 2u);
  const CellGroup& a = cfg.components[0].cells[0];
  const CellGroup& b = cfg.components[1].cells[0];
  EXPECT_EQ(a.count, 64'000'000u);
  EXPECT_EQ(b.count, 1'000'000u);
  // Per-cell measure ratio is an exact power of two of the width ratio:
  // (2/3 / 64e6) / (1/3 / 1e6) = 2^-5.
  EXPECT_NEAR(a.m0 / b.m0, 0x1p-5, 1e-15);
  EXPECT_NO_THROW(cfg.validate());
  // The narrower packet's denser cells lead by exactly five cycles.
  const auto firsts = family_first_events(cfg);
  EXPECT_NEAR(firsts[1].second, 0.0, 1e-12);
  EXPECT_NEAR(firsts[0].second, 5.0 * cfg.tau * std::numbers::ln2, 1e-9);
}

TEST(Scenario, GaussianPairShellsKeepThePerShellRatio) {
  const ScenarioConfig cfg = build_gaussian_pair(400.0, 100.0, 2.0 / 3.0, 1.0 / 3.0,
                                                 /*gaussian_weights=*/true, 32);
  ASSERT_EQ(cfg.components[0].cells.size(), 32u);
  ASSERT_EQ(cfg.components[1].cells.size(), 32u);
  EXPECT_NEAR(cfg.total_measure(), 1.0, 1e-12);
  for (std::size_t s = 0; s < 32; ++s) {
    const CellGroup& a = cfg.components[0].cells[s];
    const CellGroup& b = cfg.components[1].cells[s];
    EXPECT_EQ(a.count, 64u * b.count) << "shell " << s;
    EXPECT_NEAR(a.m0 / b.m0, 0x1p-5, 1e-12) << "shell " << s;
  }
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Scenario, GaussianPairRejectsBadShapes) {
  EXPECT_THROW(build_gaussian_pair(100.0, 400.0), ConfigError);   // swapped widths
  EXPECT_THROW(build_gaussian_pair(400.0, 100.0, 0.7, 0.2), ConfigError);
  EXPECT_THROW(build_gaussian_pair(400.0, 100.0, 2.0 / 3.0, 1.0 / 3.0, true, 0), ConfigError);
}

}  // namespace
}  // namespace branchsim
