// Whole-run orchestration: record assembly, residual accounting policies,
// engine handoff, summary statistics, and bit-stable reruns.
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include <branchsim/config_io.hpp>
#include <branchsim/errors.hpp>
#include <branchsim/runner.hpp>

namespace branchsim {
namespace {

TEST(RunScenario, SymmetricPairProducesTheDoublingTable) {
  const RunRecord rec = run_scenario(build_symmetric_pair(3));
  EXPECT_EQ(rec.engine, "exact");
  EXPECT_EQ(rec.events, 14u);  // both families split once per cycle, 2 * (2^3 - 1)
  EXPECT_DOUBLE_EQ(rec.first_event_time, 0.0);

  ASSERT_EQ(rec.counts.size(), 3u);
  const char* expect[3][2] = {{"1", "1"}, {"3", "3"}, {"7", "7"}};
  for (int k = 0; k < 3; ++k) {
    ASSERT_EQ(rec.counts[k].family_counts.size(), 2u);
    EXPECT_EQ(rec.counts[k].family_counts[0].second.to_string(), expect[k][0]);
    EXPECT_EQ(rec.counts[k].family_counts[1].second.to_string(), expect[k][1]);
    EXPECT_EQ(rec.counts[k].residual_components, 1u);
    EXPECT_DOUBLE_EQ(rec.counts[k].ratio, 1.0);
  }

  ASSERT_EQ(rec.final_counts.size(), 2u);
  EXPECT_EQ(rec.final_counts[0].first, "A");
  EXPECT_EQ(rec.final_counts[0].second.to_string(), "7");
  EXPECT_EQ(rec.final_counts[1].second.to_string(), "7");
  EXPECT_EQ(rec.final_residual_components, 1u);
  EXPECT_DOUBLE_EQ(rec.final_ratio, 1.0);
  EXPECT_LE(rec.max_conservation_drift, 1e-9);
}

TEST(RunScenario, ResidualPoliciesChangeOnlyTheRatio) {
  ScenarioConfig cfg = build_biased_pair(10);

  cfg.residual_policy = ResidualPolicy::kCountAsSplit;
  const RunRecord split = run_scenario(cfg);
  ASSERT_EQ(split.final_counts.size(), 2u);
  EXPECT_EQ(split.final_counts[0].second.to_string(), "2047");
  EXPECT_EQ(split.final_counts[1].second.to_string(), "1023");
  EXPECT_EQ(split.final_residual_components, 1u);
  // Booking the residual as one extra outcome per family gives (2^11)/(2^10).
  EXPECT_DOUBLE_EQ(split.final_ratio, 2.0);

  cfg.residual_policy = ResidualPolicy::kExclude;
  const RunRecord excl = run_scenario(cfg);
  EXPECT_EQ(excl.final_counts[0].second.to_string(), "2047");
  EXPECT_DOUBLE_EQ(excl.final_ratio, 2047.0 / 1023.0);

  cfg.residual_policy = ResidualPolicy::kCountAsOne;
  const RunRecord one = run_scenario(cfg);
  // The single shared superposition belongs to neither labeled family, so the
  // two-family ratio matches the exclusion policy.
  EXPECT_DOUBLE_EQ(one.final_ratio, 2047.0 / 1023.0);
  EXPECT_EQ(one.final_counts[0].second.to_string(), "2047");
}

TEST(RunScenario, HandoffAgreesWithTheAggregatedEngine) {
  ScenarioConfig cfg = build_biased_pair(12);
  cfg.mode = RunMode::kAggregated;
  const RunRecord agg = run_scenario(cfg);

  cfg.mode = RunMode::kHybrid;
  cfg.hybrid_residual_threshold = 0x1p-6;
  const RunRecord hyb = run_scenario(cfg);

  EXPECT_EQ(hyb.engine, "hybrid");
  EXPECT_TRUE(std::isfinite(hyb.handoff_time));
  EXPECT_GT(hyb.handoff_time, 0.0);
  EXPECT_LT(hyb.handoff_time, cfg.horizon);
  EXPECT_TRUE(std::isnan(agg.handoff_time));

  ASSERT_EQ(agg.final_counts.size(), hyb.final_counts.size());
  for (std::size_t i = 0; i < agg.final_counts.size(); ++i) {
    EXPECT_EQ(agg.final_counts[i].first, hyb.final_counts[i].first);
    EXPECT_EQ(agg.final_counts[i].second.to_string(),
              hyb.final_counts[i].second.to_string());
  }
  EXPECT_DOUBLE_EQ(agg.final_ratio, hyb.final_ratio);
  EXPECT_DOUBLE_EQ(agg.final_ratio, 2.0);
  EXPECT_LE(hyb.max_conservation_drift, 1e-9);
}

TEST(RunScenario, HandoffTriggersAtTheCapWhenTheThresholdIsUnreachable) {
  // With a cap this small the residual never becomes a 2^-20 fraction of the
  // population, so the exact phase must hand off at the cap instead of dying
  // with the capacity error a pure exact run would raise.
  ScenarioConfig cfg = build_biased_pair(12);
  cfg.mode = RunMode::kAggregated;
  const RunRecord agg = run_scenario(cfg);

  cfg.mode = RunMode::kHybrid;
  cfg.exact_population_cap = 100;
  const RunRecord hyb = run_scenario(cfg);

  EXPECT_TRUE(std::isfinite(hyb.handoff_time));
  EXPECT_LT(hyb.handoff_time, cfg.horizon);
  ASSERT_EQ(agg.final_counts.size(), hyb.final_counts.size());
  for (std::size_t i = 0; i < agg.final_counts.size(); ++i)
    EXPECT_EQ(agg.final_counts[i].second.to_string(),
              hyb.final_counts[i].second.to_string());
  EXPECT_DOUBLE_EQ(hyb.final_ratio, 2.0);
  EXPECT_LE(hyb.max_conservation_drift, 1e-9);

  cfg.mode = RunMode::kExact;
  EXPECT_THROW(run_scenario(cfg), CapacityError);
}

TEST(RunScenario, LongRunCollectsSummaryStatistics) {
  const RunRecord rec = run_scenario(build_golden_mean(60.0));
  EXPECT_EQ(rec.engine, "aggregated");
  ASSERT_GE(rec.series.size(), 20u);
  EXPECT_TRUE(std::is_sorted(rec.series.begin(), rec.series.end(),
                             [](const MeanSample& a, const MeanSample& b) { return a.t < b.t; }));

  ASSERT_FALSE(rec.envelopes.empty());
  EXPECT_EQ(rec.envelopes[0].label, "w25");
  EXPECT_TRUE(std::isfinite(rec.envelopes[0].max_abs_deviation));
  EXPECT_LT(rec.envelopes[0].max_abs_deviation, 0.5);
  for (const auto& env : rec.envelopes) EXPECT_NE(env.label, "w4300");

  // The decay fit demands two full decades past its start; a 60 tau run has
  // less than one, so the exponent is deliberately left unset here.
  EXPECT_TRUE(std::isnan(rec.fitted_exponent));

  ASSERT_TRUE(rec.histogram.has_value());
  EXPECT_TRUE(rec.histogram->normalized);
  EXPECT_GE(rec.density_distance, 0.0);
  EXPECT_LE(rec.density_distance, 0.3);
}

TEST(RunScenario, RerunsAreByteIdentical) {
  const ScenarioConfig cfg = build_golden_mean(60.0);
  const std::string a = to_json(run_scenario(cfg)).dump(2);
  const std::string b = to_json(run_scenario(cfg)).dump(2);
  EXPECT_EQ(a, b);
}

TEST(CountRatio, HandlesExactDemotedAndEmptyDenominators) {
  EXPECT_DOUBLE_EQ(count_ratio(BigCount(6), BigCount(3)), 2.0);
  EXPECT_TRUE(std::isnan(count_ratio(BigCount(1), BigCount(0))));

  const BigCount num = BigCount::from_log(800.0);
  const BigCount den = BigCount::from_log(800.0 - std::log(2.0));
  EXPECT_NEAR(count_ratio(num, den), 2.0, 1e-12);

  // Exact counts too large for double fall back to the log path.
  BigCount big_num(1), big_den(1);
  for (int i = 0; i < 2000; ++i) big_num += big_num;
  for (int i = 0; i < 1999; ++i) big_den += big_den;
  EXPECT_NEAR(count_ratio(big_num, big_den), 2.0, 1e-9);
}

TEST(FamilyMetadata, OrderFollowsDeclarationAndFirstsTakeTheEarliestCell) {
  ScenarioConfig cfg;
  cfg.components.push_back({"A", {{1, 0.5}}});
  cfg.components.push_back({"B", {{1, 0.25}}});
  cfg.components.push_back({"A", {{1, 0.125}}});  // second stratum, same family
  cfg.horizon = 1.0;

  const auto fams = family_order(cfg);
  ASSERT_EQ(fams.size(), 2u);
  EXPECT_EQ(fams[0], "A");
  EXPECT_EQ(fams[1], "B");

  const auto firsts = family_first_events(cfg);
  ASSERT_EQ(firsts.size(), 2u);
  EXPECT_EQ(firsts[0].first, "A");
  EXPECT_NEAR(firsts[0].second, 0.0, 1e-12);  // heaviest cell defines the family
  EXPECT_NEAR(firsts[1].second, std::log(2.0), 1e-12);
}

TEST(SeriesAnnotation, EmptySeriesIsANoOp) {
  RunRecord rec;
  rec.config = build_symmetric_pair(1);
  annotate_series_statistics(rec);
  EXPECT_TRUE(rec.envelopes.empty());
  EXPECT_TRUE(std::isnan(rec.fitted_exponent));
}

}  // namespace
}  // namespace branchsim
