#pragma once
// Statistics over engine output: count-weighted mean levels, the stationary
// measure density, fluctuation envelopes and their decay fit, level
// histograms, and the rational-ratio bin dynamics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "branchsim/aggregated_engine.hpp"
#include "branchsim/errors.hpp"
#include "branchsim/measure.hpp"
#include "branchsim/scenario.hpp"

namespace branchsim {

// --- mean level --------------------------------------------------------------

struct MeanSample {
  double t = 0.0;
  double ln_mean_level = 0.0;  // ln <M>_C, the count-weighted mean of m g e^{t/tau}
  double ln_count = 0.0;       // ln of the total sub-branch count
  std::uint64_t alive_classes = 0;
};

using MeanSeries = std::vector<MeanSample>;

// Limiting count-weighted mean level: Z ln(1/Z) + (1-Z) ln(1/(1-Z)).
inline double limiting_mean(const SplitParameter& sp) {
  return -sp.z * sp.log_z - (1.0 - sp.z) * sp.log_one_minus_z;
}

// Count-weighted mean level recomputed from the class table itself (keys in
// sorted order, log-domain accumulation).  The engine's O(1) accumulator view
// must agree with this within 1e-9; tests compare the two.
inline double mean_level_of_table(const AggregatedEngine& eng, double t) {
  if (eng.table().empty()) throw std::domain_error("mean level of an empty table");
  std::vector<ClassKey> keys;
  keys.reserve(eng.table().size());
  for (const auto& [key, n] : eng.table()) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  std::vector<double> count_terms, level_terms;
  for (const ClassKey& key : keys) {
    const double ln_n = eng.table().find(key)->second.log_value();
    count_terms.push_back(ln_n);
    level_terms.push_back(ln_n + eng.log_measure_of(key) + eng.log_g() + t / eng.tau());
  }
  return std::exp(log_sum_exp(level_terms) - log_sum_exp(count_terms));
}

// --- stationary density ------------------------------------------------------

// Density of sub-branch levels in the stationary regime, with Z' = min(Z,1-Z):
//   rho(M) = Z'/M^2 on [Z', 1-Z'),  1/M^2 on [1-Z', 1],  0 elsewhere.
inline double stationary_density(double M, const SplitParameter& sp) {
  if (!(M > 0.0) || !(M <= 1.0)) throw std::domain_error("density: M must lie in (0, 1]");
  const double zp = std::min(sp.z, 1.0 - sp.z);
  if (M < zp) return 0.0;
  if (M < 1.0 - zp) return zp / (M * M);
  return 1.0 / (M * M);
}

inline double stationary_cdf(double M, const SplitParameter& sp) {
  const double zp = std::min(sp.z, 1.0 - sp.z);
  if (M <= zp) return 0.0;
  if (M < 1.0 - zp) return 1.0 - zp / M;
  if (M >= 1.0) return 1.0;
  return (1.0 - zp / (1.0 - zp)) + (1.0 / (1.0 - zp) - 1.0 / M);
}

// Same density in x = ln M coordinates: u(x) = rho(e^x) e^x.
inline double stationary_density_log(double x, const SplitParameter& sp) {
  const double zp = std::min(sp.z, 1.0 - sp.z);
  if (x < std::log(zp) || x > 0.0) return 0.0;
  if (x < std::log1p(-zp)) return zp * std::exp(-x);
  return std::exp(-x);
}

// Composite Simpson quadrature (n even subintervals).
inline double simpson(double a, double b, int n, const auto& f) {
  if (n % 2 != 0 || n < 2) throw std::domain_error("simpson: n must be even and >= 2");
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Evolve the stationary density through one time step dt (in units of tau)
// and return the sup-norm residual against e^{dt} u(x) — the factor e^{dt} is
// the count growth, so a residual of zero is exactly stationarity of the
// normalized density.  Mass in [-dt, 0) fires when it reaches threshold and
// its children land in the bands [ln Z, ln Z + dt) and [ln(1-Z), ln(1-Z)+dt);
// dt must be small enough that no child fires again within the step and the
// two bands stay inside their density pieces.
inline double push_forward_residual(const SplitParameter& sp, double dt, int grid = 20001) {
  const double zp = std::min(sp.z, 1.0 - sp.z);
  const double lo = std::log(zp);
  const double band = std::abs(std::log(zp) - std::log1p(-zp));
  if (!(dt > 0.0) || dt >= std::abs(std::log1p(-zp)) || (band > 0.0 && dt >= band))
    throw std::domain_error("push_forward_residual: dt too large for a single-fire step");
  double worst = 0.0;
  for (int i = 0; i <= grid; ++i) {
    // Stay off the exact piece boundaries: the densities are discontinuous
    // there and the sup over half-open intervals is approached, not attained.
    const double x = lo + (static_cast<double>(i) + 0.5) / (grid + 1) * (-lo);
    double pushed = (x - dt >= lo) ? stationary_density_log(x - dt, sp) : 0.0;
    for (double c : {sp.log_z, sp.log_one_minus_z})
      if (c <= x && x < c + dt) pushed += std::exp(dt - (x - c));
    worst = std::max(worst, std::abs(pushed * std::exp(-dt) - stationary_density_log(x, sp)));
  }
  return worst;
}

// --- level histogram ---------------------------------------------------------

struct LevelHistogram {
  std::vector<double> edges;    // bins + 1 ascending level edges
  std::vector<double> weights;  // count-weighted occupancy per bin
  bool normalized = false;
};

// Count-weighted histogram of levels at instant t, over `bins` logarithmic
// bins spanning [Z'(1-Z'), 1] (every alive level lies above Z' > Z'(1-Z')).
inline LevelHistogram level_histogram(const AggregatedEngine& eng, double t, int bins = 64) {
  if (bins < 1) throw std::domain_error("histogram needs at least one bin");
  if (eng.table().empty()) throw std::domain_error("histogram of an empty table");
  const SplitParameter& sp = eng.split();
  const double zp = std::min(sp.z, 1.0 - sp.z);
  const double ln_lo = std::log(zp) + std::log1p(-zp);
  LevelHistogram h;
  for (int i = 0; i <= bins; ++i)
    h.edges.push_back(std::exp(ln_lo * static_cast<double>(bins - i) / bins));
  h.weights.assign(static_cast<std::size_t>(bins), 0.0);

  std::vector<ClassKey> keys;
  keys.reserve(eng.table().size());
  for (const auto& [key, n] : eng.table()) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  const double ln_total = eng.ln_count_total();
  for (const ClassKey& key : keys) {
    const double ln_level = eng.log_measure_of(key) + eng.log_g() + t / eng.tau();
    const auto bin = static_cast<std::int64_t>(
        std::floor((1.0 - ln_level / ln_lo) * bins));
    const auto clamped = static_cast<std::size_t>(std::clamp<std::int64_t>(bin, 0, bins - 1));
    h.weights[clamped] += std::exp(eng.table().find(key)->second.log_value() - ln_total);
  }
  h.normalized = true;
  return h;
}

// Sup distance between the histogram's empirical CDF and the stationary CDF,
// evaluated at the bin edges.
inline double density_distance(const LevelHistogram& h, const SplitParameter& sp) {
  double total = 0.0;
  for (double w : h.weights) total += w;
  if (!h.normalized || std::abs(total - 1.0) > 1e-6)
    throw std::domain_error("density_distance requires a normalized histogram");
  double cum = 0.0, worst = std::abs(stationary_cdf(h.edges.front(), sp));
  for (std::size_t i = 0; i < h.weights.size(); ++i) {
    cum += h.weights[i];
    worst = std::max(worst, std::abs(cum - stationary_cdf(h.edges[i + 1], sp)));
  }
  return worst;
}

// --- envelopes and the decay fit ----------------------------------------------

struct Window {
  double t_min = 0.0;  // exclusive
  double t_max = 0.0;  // inclusive
};

// Per window, max over samples of |ln meanM(t) - ln limiting_mean|.
inline std::vector<double> fluctuation_envelope(const MeanSeries& series,
                                                const SplitParameter& sp,
                                                const std::vector<Window>& windows) {
  const double ln_limit = std::log(limiting_mean(sp));
  std::vector<double> out;
  for (const Window& w : windows) {
    double worst = -1.0;
    for (const MeanSample& s : series)
      if (s.t > w.t_min && s.t <= w.t_max)
        worst = std::max(worst, std::abs(s.ln_mean_level - ln_limit));
    if (worst < 0.0)
      throw std::domain_error("fluctuation window (" + std::to_string(w.t_min) + ", " +
                              std::to_string(w.t_max) + "] contains no samples");
    out.push_back(worst);
  }
  return out;
}

// Least-squares slope of ln|deviation| against ln t, using the per-decade
// maxima of the deviation from the limiting mean, decades anchored at
// fit_start.  Requires >= 20 samples spanning >= 2 decades past fit_start.
inline double fit_decay_exponent(const MeanSeries& series, const SplitParameter& sp,
                                 double fit_start = 8.0) {
  const double ln_limit = std::log(limiting_mean(sp));
  double t_lo = std::numeric_limits<double>::infinity(), t_hi = 0.0;
  std::size_t considered = 0;
  struct DecadeMax {
    double dev = -1.0;
    double t = 0.0;
  };
  std::vector<DecadeMax> decades;
  for (const MeanSample& s : series) {
    if (s.t < fit_start) continue;
    ++considered;
    t_lo = std::min(t_lo, s.t);
    t_hi = std::max(t_hi, s.t);
    const auto d = static_cast<std::size_t>(std::floor(std::log10(s.t / fit_start)));
    if (d >= decades.size()) decades.resize(d + 1);
    const double dev = std::abs(s.ln_mean_level - ln_limit);
    if (dev > decades[d].dev) decades[d] = {dev, s.t};
  }
  if (considered < 20 || !(t_hi / t_lo >= 100.0))
    throw std::domain_error("decay fit needs >= 20 samples spanning >= 2 decades");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, n = 0.0;
  for (const DecadeMax& d : decades) {
    if (d.dev <= 0.0) continue;  // empty decade or exact zero deviation
    const double x = std::log(d.t), y = std::log(d.dev);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1.0;
  }
  if (n < 2.0) throw std::domain_error("decay fit needs at least two decade maxima");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// --- mean-series collector -----------------------------------------------------

// Engine observer that reduces the full event stream to per-bucket extremes of
// ln<M>_C on a logarithmic time grid, exactly.  Between events the mean level
// rises linearly in ln-space and drops at each event, so its extremes over any
// interval occur at pre/post-event instants or at the interval's ends; the
// collector feeds exactly those candidates into the bucket of the moment,
// injecting the boundary value into both neighbors when a bucket line is
// crossed.  The emitted series therefore carries the exact envelope of the
// sawtooth at bucket resolution in O(1) memory per bucket.
class MeanSeriesCollector {
 public:
  explicit MeanSeriesCollector(double tau, int samples_per_decade = 64)
      : tau_(tau), spd_(samples_per_decade), grid_t0_(tau / 100.0) {
    if (samples_per_decade < 1) throw std::domain_error("samples_per_decade must be >= 1");
  }

  void on_pre_event(double t, double v, double ln_count, std::size_t alive) {
    cross_to(bucket_of(t));
    offer(t, v, ln_count, alive);
  }
  void on_post_event(double t, double v, double ln_count, std::size_t alive) {
    offer(t, v, ln_count, alive);
  }

  // Close out the run: extend the final linear segment to the horizon.
  MeanSeries finish(double horizon) {
    if (have_last_) {
      const double v = last_v_ + (horizon - last_t_) / tau_;
      cross_to(bucket_of(horizon));
      offer(horizon, v, last_ln_count_, last_alive_);
      flush();
    }
    MeanSeries out = std::move(series_);
    series_.clear();
    std::stable_sort(out.begin(), out.end(),
                     [](const MeanSample& a, const MeanSample& b) { return a.t < b.t; });
    return out;
  }

 private:
  struct Bucket {
    bool used = false;
    MeanSample lo, hi;
  };

  std::int64_t bucket_of(double t) const {
    if (t < grid_t0_) return -1;
    return static_cast<std::int64_t>(std::floor(std::log10(t / grid_t0_) * spd_));
  }
  double bucket_upper_edge(std::int64_t idx) const {
    return grid_t0_ * std::pow(10.0, static_cast<double>(idx + 1) / spd_);
  }

  // Move the current bucket forward to `target`, propagating the linear
  // segment value across each crossed boundary into both adjacent buckets.
  void cross_to(std::int64_t target) {
    if (!have_last_ || target <= cur_) {
      cur_ = std::max(cur_, target);
      return;
    }
    while (cur_ < target) {
      const double tb = bucket_upper_edge(cur_);
      const double vb = last_v_ + (tb - last_t_) / tau_;
      offer(tb, vb, last_ln_count_, last_alive_);  // close the old bucket
      flush();
      ++cur_;
      offer(tb, vb, last_ln_count_, last_alive_);  // open the new one
    }
  }

  void offer(double t, double v, double ln_count, std::size_t alive) {
    const MeanSample s{t, v, ln_count, alive};
    if (!bucket_.used) {
      bucket_ = {true, s, s};
    } else {
      if (v < bucket_.lo.ln_mean_level) bucket_.lo = s;
      if (v >= bucket_.hi.ln_mean_level) bucket_.hi = s;
    }
    last_t_ = t;
    last_v_ = v;
    last_ln_count_ = ln_count;
    last_alive_ = alive;
    have_last_ = true;
  }

  void flush() {
    if (!bucket_.used) return;
    if (bucket_.lo.t == bucket_.hi.t && bucket_.lo.ln_mean_level == bucket_.hi.ln_mean_level) {
      series_.push_back(bucket_.lo);
    } else if (bucket_.lo.t <= bucket_.hi.t) {
      series_.push_back(bucket_.lo);
      series_.push_back(bucket_.hi);
    } else {
      series_.push_back(bucket_.hi);
      series_.push_back(bucket_.lo);
    }
    bucket_ = Bucket{};
  }

  double tau_;
  int spd_;
  double grid_t0_;
  std::int64_t cur_ = std::numeric_limits<std::int64_t>::min();
  Bucket bucket_;
  bool have_last_ = false;
  double last_t_ = 0.0, last_v_ = 0.0, last_ln_count_ = 0.0;
  std::size_t last_alive_ = 0;
  MeanSeries series_;
};

// --- rational-ratio bin dynamics ------------------------------------------------

// For rational ln Z / ln(1-Z) = m/n all log-measures live on the lattice of
// multiples of u = ln Z / m = ln(1-Z) / n, and max(m,n) uniform logarithmic
// bins over [ln Z', 0) resolve every lattice site an alive level can occupy.
// One lattice tick advances every site by one bin and splits the fired top
// site onto bins m-1 and n-1 (0-based), giving the transfer map below.
struct BinOccupancy {
  int bins = 0;
  std::vector<double> fixed_point;
  std::vector<std::pair<double, std::vector<double>>> series;  // (t, occupancy)
  double mean_ambiguity_factor = 0.0;  // Z^{1/n}: coarse bound on bin resolution
};

inline std::vector<double> bin_transfer_step(const std::vector<double>& nu, int m, int n) {
  const int bins = static_cast<int>(nu.size());
  std::vector<double> next(nu.size(), 0.0);
  const double fired = nu[0];
  for (int k = 0; k + 1 < bins; ++k) next[static_cast<std::size_t>(k)] = nu[static_cast<std::size_t>(k) + 1];
  next[static_cast<std::size_t>(m - 1)] += fired;
  next[static_cast<std::size_t>(n - 1)] += fired;
  double total = 0.0;
  for (double x : next) total += x;
  for (double& x : next) x /= total;
  return next;
}

inline std::vector<double> bin_transfer_fixed_point(int m, int n) {
  const int bins = std::max(m, n);
  std::vector<double> nu(static_cast<std::size_t>(bins), 1.0 / bins);
  for (int it = 0; it < 100000; ++it) {
    std::vector<double> next = bin_transfer_step(nu, m, n);
    double delta = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) delta = std::max(delta, std::abs(next[i] - nu[i]));
    nu = std::move(next);
    if (delta < 1e-15) break;
  }
  return nu;
}

// Run a single-population scenario at the rational split and record the
// count-weighted bin occupancies immediately after each event batch.
inline BinOccupancy rational_bin_occupancy(const SplitParameter& sp, double t_max) {
  if (sp.ratio_class.kind != RatioClass::kRational)
    throw std::domain_error("bin occupancy requires a rational log-measure ratio");
  const int m = static_cast<int>(sp.ratio_class.num);
  const int n = static_cast<int>(sp.ratio_class.den);
  BinOccupancy out;
  out.bins = std::max(m, n);
  out.fixed_point = bin_transfer_fixed_point(m, n);
  out.mean_ambiguity_factor = std::pow(sp.z, 1.0 / n);

  ScenarioConfig cfg;
  cfg.name = "bin-occupancy";
  cfg.components = {{"G", {{1, 1.0}}}};
  cfg.z = sp.z;
  cfg.ratio_tolerance = 1e-9;
  cfg.tau = 1.0;
  cfg.g = 0.0;
  cfg.mode = RunMode::kAggregated;
  cfg.horizon = t_max;
  AggregatedEngine eng(cfg);

  const double ln_zp = std::log(std::min(sp.z, 1.0 - sp.z));
  auto occupancy_now = [&](double t) {
    std::vector<ClassKey> keys;
    for (const auto& [key, cnt] : eng.table()) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    std::vector<double> occ(static_cast<std::size_t>(out.bins), 0.0);
    for (const ClassKey& key : keys) {
      const double ln_level = eng.log_measure_of(key) + eng.log_g() + t / eng.tau();
      auto bin = static_cast<std::int64_t>(
          std::floor(static_cast<double>(out.bins) * ln_level / ln_zp - 1e-9));
      bin = std::clamp<std::int64_t>(bin, 0, out.bins - 1);
      occ[static_cast<std::size_t>(bin)] +=
          std::exp(eng.table().find(key)->second.log_value() - eng.ln_count_total());
    }
    return occ;
  };

  while (eng.next_event_time() < t_max) {
    const double t = eng.next_event_time();
    // Drain the whole simultaneous batch before sampling.
    while (eng.next_event_time() <= t + 1e-12 * eng.tau()) eng.step();
    out.series.push_back({t, occupancy_now(t)});
  }
  return out;
}

}  // namespace branchsim
