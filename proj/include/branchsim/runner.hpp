#pragma once
// Whole-run orchestration: pick the engine for a ScenarioConfig, drive it to
// the horizon with conservation checks at every sample, and assemble a
// RunRecord holding everything the front end serializes.
//
// A RunRecord is the unit of output.  Its config echo is complete: feeding it
// back through run_scenario reproduces the record bit for bit.  Wall-clock
// time is deliberately not part of the record (it would break byte-identical
// reruns); the front end reports it on the error stream instead.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <branchsim/aggregated_engine.hpp>
#include <branchsim/exact_engine.hpp>
#include <branchsim/scenario.hpp>
#include <branchsim/stats.hpp>
#include <branchsim/version.hpp>

namespace branchsim {

// Distinct families in declaration order; the first two define the ratio
// numerator/denominator everywhere a two-family ratio is reported.
inline std::vector<std::string> family_order(const ScenarioConfig& cfg) {
  std::vector<std::string> fams;
  for (const auto& comp : cfg.components)
    if (std::find(fams.begin(), fams.end(), comp.family) == fams.end())
      fams.push_back(comp.family);
  return fams;
}

// Earliest threshold time per family (closed form: the heaviest cell of the
// family fires first).
inline std::vector<std::pair<std::string, double>> family_first_events(const ScenarioConfig& cfg) {
  const double log_g = cfg.log_g_effective();
  std::map<std::string, double> best;
  for (const auto& comp : cfg.components)
    for (const auto& grp : comp.cells) {
      const double t = branch_time_log(std::log(grp.m0), log_g, cfg.tau);
      auto [it, fresh] = best.emplace(comp.family, t);
      if (!fresh) it->second = std::min(it->second, t);
    }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& fam : family_order(cfg)) out.emplace_back(fam, best.at(fam));
  return out;
}

inline double count_ratio(const BigCount& num, const BigCount& den) {
  if (den.is_zero()) return std::numeric_limits<double>::quiet_NaN();
  if (num.is_exact() && den.is_exact()) {
    const double a = num.to_double(), b = den.to_double();
    if (std::isfinite(a) && std::isfinite(b)) return a / b;
  }
  return std::exp(num.log_value() - den.log_value());
}

// Per-sample labeled counts.  family_counts holds pure single-cell pieces
// only (policy-independent); the residual superposition is booked separately
// as the number of initial components still carrying residual measure, and
// the ratio column applies the configured residual policy.
struct SnapshotCounts {
  double t = 0.0;
  std::vector<std::pair<std::string, BigCount>> family_counts;
  std::uint64_t residual_components = 0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
};

struct EnvelopeResult {
  std::string label;  // "w25" = window opening at 25 tau, closing at the horizon
  Window window;
  double max_abs_deviation = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::string tool_version = std::string(kToolVersion);
  ScenarioConfig config;  // fully resolved echo
  std::string engine;     // "exact" | "aggregated" | "hybrid"

  MeanSeries series;                   // event-envelope mean series (aggregated phase)
  std::vector<MeanSample> samples;     // mean state at the requested sample times
  std::vector<SnapshotCounts> counts;  // labeled counts at the requested sample times

  std::vector<std::pair<std::string, double>> family_firsts;  // first threshold time per family
  std::vector<std::pair<std::string, BigCount>> final_counts;  // pure labeled counts per family
  std::uint64_t final_residual_components = 0;
  double final_ratio = std::numeric_limits<double>::quiet_NaN();  // configured-policy ratio
  double first_event_time = std::numeric_limits<double>::quiet_NaN();
  double handoff_time = std::numeric_limits<double>::quiet_NaN();  // hybrid only
  double final_time = 0.0;
  std::uint64_t events = 0;
  double max_conservation_drift = 0.0;

  // Summary statistics; NaN / empty means "not applicable to this run".
  std::vector<EnvelopeResult> envelopes;
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  double density_distance = std::numeric_limits<double>::quiet_NaN();
  std::optional<LevelHistogram> histogram;

  double wall_seconds = 0.0;  // diagnostic only; never serialized
};

namespace detail {

inline double policy_ratio(const std::map<std::string, BigCount>& by_family,
                           const std::vector<std::string>& fams) {
  if (fams.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto a = by_family.find(fams[0]);
  const auto b = by_family.find(fams[1]);
  if (a == by_family.end() || b == by_family.end())
    return std::numeric_limits<double>::quiet_NaN();
  return count_ratio(a->second, b->second);
}

inline SnapshotCounts snapshot_counts_of(const ExactSnapshot& snap, const ExactEngine& eng,
                                         const ScenarioConfig& cfg,
                                         const std::vector<std::string>& fams) {
  SnapshotCounts row;
  row.t = snap.t;
  std::map<std::string, BigCount> pure;
  for (const auto& s : snap.singles)
    pure[eng.cells()[static_cast<std::size_t>(s.cell)].family] += BigCount(1);
  for (const auto& fam : fams) row.family_counts.emplace_back(fam, pure[fam]);
  // Everything still carrying the initial label is one coherent superposition,
  // however many cells or families it spans; the residual policies exist
  // precisely because counting it per family is a choice, not a fact.
  row.residual_components = snap.residual.empty() ? 0 : 1;
  row.ratio = policy_ratio(outcome_counts(snap, eng.cells(), cfg.residual_policy), fams);
  return row;
}

// Count-weighted mean state of an exact snapshot (all pieces share one t).
inline MeanSample mean_sample_of(const ExactSnapshot& snap, const ExactEngine& eng) {
  std::vector<double> terms;
  terms.reserve(snap.singles.size() + snap.residual.size());
  for (const auto& s : snap.singles) terms.push_back(s.log_m);
  for (const auto& h : snap.residual) terms.push_back(h.log_m);
  const auto n = static_cast<double>(terms.size());
  const double ln_count = std::log(n);
  std::set<std::tuple<std::int32_t, std::uint32_t, std::uint32_t>> classes;
  for (const auto& s : snap.singles)
    classes.insert({eng.cells()[static_cast<std::size_t>(s.cell)].population, s.a, s.b});
  for (const auto& h : snap.residual)
    classes.insert({eng.cells()[static_cast<std::size_t>(h.cell)].population, 0u, h.b});
  return {snap.t, log_sum_exp(terms) + eng.log_g() + snap.t / eng.tau() - ln_count, ln_count,
          classes.size()};
}

inline void fill_final_from_families(RunRecord& rec, std::map<std::string, BigCount> by_family,
                                     const std::vector<std::string>& fams) {
  for (const auto& fam : fams) rec.final_counts.emplace_back(fam, by_family[fam]);
  rec.final_ratio = policy_ratio(by_family, fams);
}

}  // namespace detail

// Standard reporting windows for long mean-deviation runs, opening at fixed
// multiples of tau and closing at the horizon.  Windows the series cannot
// populate are skipped.
inline void annotate_series_statistics(RunRecord& rec) {
  if (rec.series.empty()) return;
  const SplitParameter sp = rec.config.split();
  const double tau = rec.config.tau;
  struct Opening {
    const char* label;
    double lo;
  };
  for (const Opening w : {Opening{"w25", 25.0}, Opening{"w150", 150.0}, Opening{"w4300", 4300.0}}) {
    const Window win{w.lo * tau, rec.final_time};
    if (!(win.t_min < win.t_max)) continue;
    const bool populated = std::any_of(rec.series.begin(), rec.series.end(), [&](const MeanSample& s) {
      return s.t > win.t_min && s.t <= win.t_max;
    });
    if (!populated) continue;
    rec.envelopes.push_back({w.label, win, fluctuation_envelope(rec.series, sp, {win})[0]});
  }
  try {
    rec.fitted_exponent = fit_decay_exponent(rec.series, sp, 8.0 * tau);
  } catch (const std::domain_error&) {
    rec.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  }
}

inline RunRecord run_exact_scenario(const ScenarioConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  rec.engine = "exact";
  rec.first_event_time = first_event_time(cfg);
  rec.family_firsts = family_first_events(cfg);
  const auto fams = family_order(cfg);

  ExactEngine eng(cfg);
  const auto snaps = eng.run(cfg.horizon, cfg.sample_times);
  for (const auto& snap : snaps) {
    rec.counts.push_back(detail::snapshot_counts_of(snap, eng, cfg, fams));
    rec.samples.push_back(detail::mean_sample_of(snap, eng));
  }
  const ExactSnapshot last{cfg.horizon, eng.singles(), eng.residual(),
                           static_cast<std::uint32_t>(eng.labels().size())};
  const SnapshotCounts final_row = detail::snapshot_counts_of(last, eng, cfg, fams);
  rec.final_counts = final_row.family_counts;
  rec.final_residual_components = final_row.residual_components;
  rec.final_ratio = final_row.ratio;
  rec.final_time = cfg.horizon;
  rec.events = eng.events_processed();
  rec.max_conservation_drift = eng.max_conservation_drift();
  return rec;
}

inline RunRecord run_aggregated_scenario(const ScenarioConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  rec.engine = "aggregated";
  rec.first_event_time = first_event_time(cfg);
  rec.family_firsts = family_first_events(cfg);
  const auto fams = family_order(cfg);

  AggregatedEngine eng(cfg);
  MeanSeriesCollector collector(cfg.tau, cfg.samples_per_decade);
  std::vector<double> stimes = cfg.sample_times;
  std::sort(stimes.begin(), stimes.end());
  for (const double s : stimes) {
    if (s > cfg.horizon) break;
    eng.run_until(s, collector);
    eng.check_conservation();
    rec.samples.push_back({s, eng.ln_mean_level(s), eng.ln_count_total(), eng.alive_classes()});
    SnapshotCounts row;
    row.t = s;
    auto by_family = eng.family_counts();
    for (const auto& fam : fams) row.family_counts.emplace_back(fam, by_family[fam]);
    row.ratio = detail::policy_ratio(by_family, fams);
    rec.counts.push_back(std::move(row));
  }
  eng.run_until(cfg.horizon, collector);
  eng.check_conservation();
  rec.series = collector.finish(cfg.horizon);
  detail::fill_final_from_families(rec, eng.family_counts(), fams);
  rec.final_time = cfg.horizon;
  rec.events = eng.events_processed();
  rec.max_conservation_drift = eng.max_conservation_drift();
  if (eng.alive_classes() > 0 && eng.events_processed() > 0) {
    rec.histogram = level_histogram(eng, cfg.horizon);
    rec.density_distance = density_distance(*rec.histogram, cfg.split());
  }
  annotate_series_statistics(rec);
  return rec;
}

// Exact until the residual superposition is a negligible fraction of the
// population, then hand the per-cell census to the aggregated engine.
inline RunRecord run_hybrid_scenario(const ScenarioConfig& cfg) {
  RunRecord rec;
  rec.config = cfg;
  rec.engine = "hybrid";
  rec.first_event_time = first_event_time(cfg);
  rec.family_firsts = family_first_events(cfg);
  const auto fams = family_order(cfg);

  ExactEngine ex(cfg);
  std::vector<double> stimes = cfg.sample_times;
  std::sort(stimes.begin(), stimes.end());
  std::size_t si = 0;

  auto sample_exact_below = [&](double limit) {
    while (si < stimes.size() && stimes[si] <= cfg.horizon && stimes[si] < limit) {
      ex.check_conservation();
      const ExactSnapshot snap{stimes[si], ex.singles(), ex.residual(),
                               static_cast<std::uint32_t>(ex.labels().size())};
      rec.counts.push_back(detail::snapshot_counts_of(snap, ex, cfg, fams));
      rec.samples.push_back(detail::mean_sample_of(snap, ex));
      ++si;
    }
  };

  // The exact phase ends when the residual is negligible — or when the next
  // event would exceed the population cap, in case the configured threshold
  // is unreachable under the cap: handing off early is what keeps a hybrid
  // run alive where a pure exact run would stop.
  auto cap_reached = [&] {
    return ex.singles().size() + ex.residual().size() + 1 > cfg.exact_population_cap;
  };
  while (ex.residual_relative_count() > cfg.hybrid_residual_threshold &&
         ex.next_event_time() < cfg.horizon && !cap_reached()) {
    sample_exact_below(ex.next_event_time());
    ex.step();
  }

  if (ex.residual_relative_count() > cfg.hybrid_residual_threshold && !cap_reached()) {
    // Horizon reached while still carrying a noticeable residual: the whole
    // run was exact; finish like the exact runner.
    sample_exact_below(std::nextafter(cfg.horizon, std::numeric_limits<double>::infinity()));
    ex.check_conservation();
    const ExactSnapshot last{cfg.horizon, ex.singles(), ex.residual(),
                             static_cast<std::uint32_t>(ex.labels().size())};
    const SnapshotCounts final_row = detail::snapshot_counts_of(last, ex, cfg, fams);
    rec.final_counts = final_row.family_counts;
    rec.final_residual_components = final_row.residual_components;
    rec.final_ratio = final_row.ratio;
    rec.final_time = cfg.horizon;
    rec.events = ex.events_processed();
    rec.max_conservation_drift = ex.max_conservation_drift();
    return rec;
  }

  const double t_handoff = ex.time();
  rec.handoff_time = t_handoff;
  AggregatedEngine ag(cfg, ex.class_census(), t_handoff);
  MeanSeriesCollector collector(cfg.tau, cfg.samples_per_decade);
  for (; si < stimes.size() && stimes[si] <= cfg.horizon; ++si) {
    ag.run_until(stimes[si], collector);
    ag.check_conservation();
    rec.samples.push_back(
        {stimes[si], ag.ln_mean_level(stimes[si]), ag.ln_count_total(), ag.alive_classes()});
    SnapshotCounts row;
    row.t = stimes[si];
    auto by_family = ag.family_counts();
    for (const auto& fam : fams) row.family_counts.emplace_back(fam, by_family[fam]);
    row.ratio = detail::policy_ratio(by_family, fams);
    rec.counts.push_back(std::move(row));
  }
  ag.run_until(cfg.horizon, collector);
  ag.check_conservation();
  rec.series = collector.finish(cfg.horizon);
  detail::fill_final_from_families(rec, ag.family_counts(), fams);
  rec.final_time = cfg.horizon;
  rec.events = ex.events_processed() + ag.events_processed();
  rec.max_conservation_drift =
      std::max(ex.max_conservation_drift(), ag.max_conservation_drift());
  if (ag.alive_classes() > 0) {
    rec.histogram = level_histogram(ag, cfg.horizon);
    rec.density_distance = density_distance(*rec.histogram, cfg.split());
  }
  annotate_series_statistics(rec);
  return rec;
}

inline RunRecord run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  switch (cfg.mode) {
    case RunMode::kExact:
      return run_exact_scenario(cfg);
    case RunMode::kAggregated:
      return run_aggregated_scenario(cfg);
    case RunMode::kHybrid:
      return run_hybrid_scenario(cfg);
  }
  throw ConfigError("unknown run mode");
}

}  // namespace branchsim
