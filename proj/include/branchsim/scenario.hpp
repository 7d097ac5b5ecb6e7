#pragma once
// Scenario configuration and constructors for the built-in initial states.
//
// A scenario is a list of components, each a macro-outcome family holding
// groups of pointer cells that share one per-cell initial measure.  Groups
// compress what would otherwise be millions of identical cells (the Gaussian
// wave-packet scenarios cover ~10^8 cells); engines treat a group as a
// population with a multiplicity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "branchsim/errors.hpp"
#include "branchsim/measure.hpp"

namespace branchsim {

enum class RunMode { kExact, kAggregated, kHybrid };

// What to do with the never-labeled residual superposition when counting
// sub-branches per family:
//   kCountAsSplit — contributes one count to every family it spans,
//   kCountAsOne   — one count under the reserved "superposition" family,
//   kExclude      — dropped.
enum class ResidualPolicy { kCountAsSplit, kCountAsOne, kExclude };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::kExact: return "exact";
    case RunMode::kAggregated: return "aggregated";
    case RunMode::kHybrid: return "hybrid";
  }
  return "?";
}

inline const char* to_string(ResidualPolicy p) {
  switch (p) {
    case ResidualPolicy::kCountAsSplit: return "countAsSplit";
    case ResidualPolicy::kCountAsOne: return "countAsOne";
    case ResidualPolicy::kExclude: return "exclude";
  }
  return "?";
}

// `count` identical cells, each starting with per-cell measure `m0`.
struct CellGroup {
  std::uint64_t count = 1;
  double m0 = 0.0;
};

struct Component {
  std::string family;
  std::vector<CellGroup> cells;

  double total_measure() const {
    double s = 0.0;
    for (const auto& g : cells) s += static_cast<double>(g.count) * g.m0;
    return s;
  }
};

struct ScenarioConfig {
  std::string name = "custom";
  std::vector<Component> components;

  // Split fraction: either z directly, or z_preset = "golden" which overrides
  // z with the split whose log-ratio is the golden ratio.
  double z = 0.5;
  std::string z_preset;  // "" or "golden"
  double ratio_tolerance = 1e-9;

  double tau = 1.0;
  // Growth prefactor g in level(t) = m * g * exp(t/tau).  g = 0 encodes
  // "normalize-first-event": g is set to 1/max(m0) so the largest cell
  // reaches threshold exactly at t = 0.
  double g = 0.0;

  RunMode mode = RunMode::kAggregated;
  ResidualPolicy residual_policy = ResidualPolicy::kCountAsSplit;

  double horizon = 0.0;
  std::vector<double> sample_times;   // explicit snapshot/sample instants
  int samples_per_decade = 64;        // log-time mean-series grid density

  std::uint64_t seed = 1;

  std::uint64_t exact_population_cap = 1'000'000;  // labeled sub-branch limit
  double hybrid_residual_threshold = 0x1p-20;      // residual relative count for handoff

  SplitParameter split() const {
    if (z_preset == "golden") return golden_split(ratio_tolerance);
    if (!z_preset.empty())
      throw ConfigError("unknown z preset \"" + z_preset + "\" (expected \"golden\")");
    return make_split_parameter(z, ratio_tolerance);
  }

  // Effective growth prefactor as a log, resolving the normalize-first-event
  // sentinel so that log(m_max) + log_g == 0 exactly.
  double log_g_effective() const {
    if (g > 0.0) return std::log(g);
    double max_log_m0 = kLogZero;
    for (const auto& c : components)
      for (const auto& grp : c.cells)
        max_log_m0 = std::max(max_log_m0, std::log(grp.m0));
    if (max_log_m0 == kLogZero) throw ConfigError("scenario has no cells");
    return -max_log_m0;
  }

  double total_measure() const {
    double s = 0.0;
    for (const auto& c : components) s += c.total_measure();
    return s;
  }

  void validate() const {
    if (components.empty()) throw ConfigError("scenario has no components");
    for (const auto& c : components) {
      if (c.cells.empty()) throw ConfigError("component \"" + c.family + "\" has no cells");
      for (const auto& grp : c.cells) {
        if (grp.count == 0) throw ConfigError("cell group with zero count");
        if (!(grp.m0 > 0.0) || !(grp.m0 <= 1.0))
          throw ConfigError("per-cell initial measure must lie in (0, 1]");
      }
    }
    const double total = total_measure();
    if (std::abs(total - 1.0) > 1e-12)
      throw ConfigError("initial measures must sum to 1 (got " + std::to_string(total) + ")");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (g < 0.0) throw ConfigError("g must be > 0, or 0 for normalize-first-event");
    (void)split();        // validates z / z_preset
    (void)log_g_effective();
  }
};

// Earliest threshold crossing over all cells of the configured scenario.
inline double first_event_time(const ScenarioConfig& cfg) {
  const double log_g = cfg.log_g_effective();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cfg.components)
    for (const auto& grp : c.cells)
      best = std::min(best, branch_time_log(std::log(grp.m0), log_g, cfg.tau));
  return best;
}

// --- Built-in scenarios ----------------------------------------------------

// Symmetric two-outcome pointer state: one initial superposition with measure
// 1/2 on each of two cells, z = 1/2, g = 2 so both cells trigger at t = 0 and
// then in simultaneous pairs every T = tau ln 2.  After J paired batches the
// exact engine holds 2^J - 1 pure-A and 2^J - 1 pure-B labeled sub-branches
// plus the one residual superposition.
inline ScenarioConfig build_symmetric_pair(int doublings, double tau = 1.0) {
  if (doublings < 1) throw ConfigError("doublings must be >= 1");
  ScenarioConfig cfg;
  cfg.name = "symmetric-pair";
  cfg.components = {{"A", {{1, 0.5}}}, {"B", {{1, 0.5}}}};
  cfg.z = 0.5;
  cfg.tau = tau;
  cfg.g = 2.0;
  cfg.mode = RunMode::kExact;
  const double T = tau * std::numbers::ln2_v<double>;
  cfg.horizon = (static_cast<double>(doublings) - 0.5) * T;
  for (int k = 0; k < doublings; ++k)
    cfg.sample_times.push_back((static_cast<double>(k) + 0.5) * T);
  cfg.exact_population_cap = std::max<std::uint64_t>(
      cfg.exact_population_cap, (std::uint64_t{8} << std::min(doublings, 40)) + 16);
  return cfg;
}

// Biased two-outcome pointer state: measures 2/3 and 1/3, z = 1/2, g = 3/2.
// The heavy cell alone triggers at t = 0; from t = T on both sides trigger in
// pairs, so after J doublings there are 2^{J+1} - 1 pure-A and 2^J - 1 pure-B
// labeled sub-branches and the count ratio is exactly two under the
// count-as-split residual policy.
inline ScenarioConfig build_biased_pair(int doublings, double tau = 1.0) {
  if (doublings < 1) throw ConfigError("doublings must be >= 1");
  ScenarioConfig cfg;
  cfg.name = "biased-pair";
  cfg.components = {{"A", {{1, 2.0 / 3.0}}}, {"B", {{1, 1.0 / 3.0}}}};
  cfg.z = 0.5;
  cfg.tau = tau;
  cfg.g = 1.5;
  cfg.mode = RunMode::kExact;
  const double T = tau * std::numbers::ln2_v<double>;
  cfg.horizon = (static_cast<double>(doublings) + 0.5) * T;
  for (int k = 0; k <= doublings; ++k)
    cfg.sample_times.push_back((static_cast<double>(k) + 0.5) * T);
  cfg.exact_population_cap = std::max<std::uint64_t>(
      cfg.exact_population_cap, (std::uint64_t{16} << std::min(doublings, 40)) + 16);
  return cfg;
}

// Stationary sub-branch measure density for split fraction z, as a quantile
// helper for initial conditions.  With Z' = min(z, 1-z) the density is
// Z'/M^2 on [Z', 1-Z') and 1/M^2 on [1-Z', 1].
inline double stationary_quantile(double u, double z) {
  if (!(u >= 0.0) || !(u < 1.0)) throw std::domain_error("quantile: u must lie in [0,1)");
  const double zp = std::min(z, 1.0 - z);
  const double u1 = 1.0 - zp / (1.0 - zp);
  if (u < u1) return zp / (1.0 - u);
  return 1.0 / (1.0 / (1.0 - zp) - (u - u1));
}

// Long-horizon single-family run at the golden split, used to reproduce the
// mean-measure fluctuation envelopes.  `strata` > 1 spreads the initial
// measure over that many cells placed at stationary-density quantiles, which
// starts the run closer to the limiting distribution and shrinks the initial
// transient without biasing the limit.
inline ScenarioConfig build_golden_mean(double horizon_tau = 8000.0, int strata = 1,
                                        std::uint64_t seed = 1) {
  if (strata < 1) throw ConfigError("strata must be >= 1");
  ScenarioConfig cfg;
  cfg.name = "golden-mean";
  cfg.z_preset = "golden";
  cfg.tau = 1.0;
  cfg.g = 0.0;  // normalize-first-event
  cfg.mode = RunMode::kAggregated;
  cfg.horizon = horizon_tau;
  cfg.seed = seed;
  Component comp;
  comp.family = "G";
  if (strata == 1) {
    comp.cells = {{1, 1.0}};
  } else {
    const double z = golden_split().z;
    std::vector<double> m(static_cast<std::size_t>(strata));
    double total = 0.0;
    for (int i = 0; i < strata; ++i) {
      m[static_cast<std::size_t>(i)] =
          stationary_quantile((static_cast<double>(i) + 0.5) / strata, z);
      total += m[static_cast<std::size_t>(i)];
    }
    for (double mi : m) comp.cells.push_back({1, mi / total});
  }
  cfg.components = {comp};
  return cfg;
}

// Two Gaussian wave packets spread over pointer cells of linear size w.
// widths are in units of w.  Uniform mode approximates each packet as
// (width)^3 equally weighted cells; Gaussian mode discretizes the radial
// 3-D Gaussian mass into `shells` spherical shells out to 4 sigma.
//
// Cell counts for the wider packet are constructed as exactly
// round((width_a/width_b)^3) times the narrower packet's, per shell, so the
// count ratio and every per-cell measure ratio are exact powers of the input
// ratio rather than rounding noise.
inline ScenarioConfig build_gaussian_pair(double width_a = 400.0, double width_b = 100.0,
                                          double measure_a = 2.0 / 3.0,
                                          double measure_b = 1.0 / 3.0,
                                          bool gaussian_weights = false, int shells = 32,
                                          double z = 0.5, double tau = 1.0) {
  if (!(width_a > 0.0) || !(width_b > 0.0))
    throw ConfigError("packet widths must be > 0");
  if (std::abs(measure_a + measure_b - 1.0) > 1e-12)
    throw ConfigError("packet measures must sum to 1");
  if (width_a < width_b)
    throw ConfigError("width_a must be the wider packet (swap the arguments)");
  if (shells < 1) throw ConfigError("shells must be >= 1");

  const double count_ratio = std::round(std::pow(width_a / width_b, 3.0));
  if (!(count_ratio >= 1.0)) throw ConfigError("width ratio too small to resolve cells");

  ScenarioConfig cfg;
  cfg.name = gaussian_weights ? "gaussian-pair-shells" : "gaussian-pair-uniform";
  cfg.z = z;
  cfg.tau = tau;
  cfg.g = 0.0;  // normalize-first-event: first event of the denser packet at t = 0
  cfg.mode = RunMode::kAggregated;
  cfg.horizon = 1.0;  // callers overwrite; validate() demands > 0

  Component a{"A", {}}, b{"B", {}};
  if (!gaussian_weights) {
    const auto nb = static_cast<std::uint64_t>(std::llround(std::pow(width_b, 3.0)));
    if (nb == 0) throw ConfigError("narrow packet resolves to zero cells");
    const auto na = static_cast<std::uint64_t>(count_ratio) * nb;
    a.cells = {{na, measure_a / static_cast<double>(na)}};
    b.cells = {{nb, measure_b / static_cast<double>(nb)}};
  } else {
    // Radial mass fraction of a 3-D standard Gaussian inside radius r (in
    // sigma units): M(r) = erf(r/sqrt 2) - sqrt(2/pi) r exp(-r^2/2).
    auto radial_mass = [](double r) {
      return std::erf(r / std::numbers::sqrt2_v<double>) -
             std::sqrt(2.0 / std::numbers::pi_v<double>) * r * std::exp(-0.5 * r * r);
    };
    const double renorm = radial_mass(4.0);
    const double dr_sigma = 4.0 / shells;            // shell thickness, sigma units
    const double dr_b = width_b * dr_sigma;          // same, in units of w for packet B
    for (int k = 0; k < shells; ++k) {
      const double f = (radial_mass((k + 1) * dr_sigma) - radial_mass(k * dr_sigma)) / renorm;
      const double volume_b = (4.0 * std::numbers::pi_v<double> / 3.0) *
                              (std::pow((k + 1) * dr_b, 3.0) - std::pow(k * dr_b, 3.0));
      const auto nb = static_cast<std::uint64_t>(std::max(1.0, std::round(volume_b)));
      const auto na = static_cast<std::uint64_t>(count_ratio) * nb;
      b.cells.push_back({nb, measure_b * f / static_cast<double>(nb)});
      a.cells.push_back({na, measure_a * f / static_cast<double>(na)});
    }
  }
  cfg.components = {a, b};
  return cfg;
}

}  // namespace branchsim
