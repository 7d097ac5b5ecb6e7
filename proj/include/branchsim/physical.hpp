#pragma once
// Physical-regime calculators: single-particle spreading delay, mass
// thresholds, the N-particle dephased event stream, the Gaussian quadratic
// spreading diagnostic, and the branch-variance energy drift rate.
//
// Everything internal is SI; unit conversions (the conventional cm / g / s
// inputs) happen at the CLI boundary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "branchsim/errors.hpp"
#include "branchsim/measure.hpp"

namespace branchsim {

inline constexpr double kHbar = 1.054571817e-34;          // J s
inline constexpr double kProtonMassKg = 1.67262192e-27;   // kg

enum class RateScaling { kMassIndependent, kProportionalToMass };

inline const char* to_string(RateScaling s) {
  return s == RateScaling::kMassIndependent ? "massIndependent" : "proportionalToMass";
}

struct PhysicalParams {
  double mass_kg = kProtonMassKg;
  double width_m = 1e-7;       // pointer cell width w (10^-5 cm)
  double rate_per_s = 1e-16;   // single-particle branching rate 1/tau_1
  double hbar = kHbar;
  RateScaling rate_scaling = RateScaling::kMassIndependent;
  double epsilon = 1e-45;      // anomalous-energy coupling, dimensionless

  double tau1() const { return 1.0 / rate_per_s; }
  // Wave-packet spreading time t0 = w^2 m / hbar.
  double t0() const { return width_m * width_m * mass_kg / hbar; }

  void validate() const {
    if (!(mass_kg > 0.0) || !(width_m > 0.0) || !(rate_per_s > 0.0) || !(hbar > 0.0) ||
        !(epsilon > 0.0))
      throw ConfigError("physical parameters must all be positive");
  }
};

// Free-particle level with dispersive dilution:
//   M(t) = exp(t/tau1) (1 + (t/t0)^2)^{-3/2} / 2.
// The exponential growth must first beat the t^-3 spreading of the packet
// over ~(t/t0)^3 cells, which delays the second branching of an isolated
// particle far beyond tau1.
struct SpreadingDelayResult {
  double t0 = 0.0;
  double tau1 = 0.0;
  bool rebranches = true;
  double next_branch_time = 0.0;  // root of M(t) = 1 (infinity if none below horizon)
  double delay_factor = 0.0;      // asymptotic logarithmic factor 3 ln(tau1/t0)
  double dilution_minimum_time = 0.0;
  double cells_covered = 0.0;     // packet volume in cells at the dilution minimum
  bool asymptotic_valid = true;   // tau1 >> t0 held, so delay_factor is meaningful
};

// ln M(t) - ln 1, the root function for the threshold crossing.
inline double spreading_log_level(double t, double t0, double tau1) {
  const double r = t / t0;
  return t / tau1 - std::numbers::ln2_v<double> - 1.5 * std::log1p(r * r);
}

inline SpreadingDelayResult spreading_delay(
    const PhysicalParams& p,
    double search_horizon = std::numeric_limits<double>::infinity()) {
  p.validate();
  SpreadingDelayResult out;
  out.t0 = p.t0();
  out.tau1 = p.tau1();
  out.delay_factor = 3.0 * std::log(out.tau1 / out.t0);
  out.asymptotic_valid = out.tau1 >= 1e3 * out.t0;

  // Dilution minimum of M(t): d/dt ln M = 0 at t^2 - 3 tau1 t + t0^2 = 0.
  const double disc = 9.0 * out.tau1 * out.tau1 - 4.0 * out.t0 * out.t0;
  if (disc > 0.0) {
    out.dilution_minimum_time = 0.5 * (3.0 * out.tau1 + std::sqrt(disc));
    const double r = out.dilution_minimum_time / out.t0;
    out.cells_covered = std::exp(1.5 * std::log1p(r * r));
  } else {
    // Growth beats dilution from the start; the packet never shrinks the
    // level, so the "cells covered" notion collapses to a single cell.
    out.dilution_minimum_time = 0.0;
    out.cells_covered = 1.0;
  }

  // Bracket the single upward crossing of M = 1 and bisect.
  double hi = out.tau1;
  while (spreading_log_level(hi, out.t0, out.tau1) < 0.0 && hi < search_horizon) hi *= 2.0;
  if (spreading_log_level(hi, out.t0, out.tau1) < 0.0) {
    out.rebranches = false;
    out.next_branch_time = std::numeric_limits<double>::infinity();
    return out;
  }
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (spreading_log_level(mid, out.t0, out.tau1) < 0.0 ? lo : hi) = mid;
  }
  out.next_branch_time = 0.5 * (lo + hi);
  if (out.next_branch_time > search_horizon) out.rebranches = false;
  return out;
}

// Mass above which branching outpaces packet spreading (tau < t0):
//   massIndependent rate: t0(m) = tau1 at m = hbar tau1 / w^2;
//   proportionalToMass:  tau(m) = tau1 m_ref/m meets t0(m) at
//                        m = sqrt(hbar tau1 m_ref) / w,
// with m_ref the reference mass whose rate is 1/tau1 (the configured mass).
inline double mass_threshold(const PhysicalParams& p) {
  p.validate();
  if (p.rate_scaling == RateScaling::kMassIndependent)
    return p.hbar * p.tau1() / (p.width_m * p.width_m);
  return std::sqrt(p.hbar * p.tau1() * p.mass_kg) / p.width_m;
}

// Mean time between branchings for a mass-m object at z = 1/2: T = tau_eff ln 2,
// where tau_eff is tau1 scaled per the configured rate law (reference mass =
// the configured mass_kg).
inline double branch_interval(const PhysicalParams& p, double object_mass_kg) {
  p.validate();
  if (!(object_mass_kg > 0.0)) throw ConfigError("object mass must be positive");
  const double tau_eff = p.rate_scaling == RateScaling::kMassIndependent
                             ? p.tau1()
                             : p.tau1() * (p.mass_kg / object_mass_kg);
  return tau_eff * std::numbers::ln2_v<double>;
}

// Gaussian specialization of the quadratic-spreading diagnostic: the
// dimensionless curvature ratio 3 (tau_eff/t0)^2, from
// d^2/dt^2 (1+(t/t0)^2)^{-3/2} |_{t=0} = -3/t0^2.  Values << 1 mean the level
// grows cleanly exponentially over one branching time; >> 1 means spreading
// dominates and the isolated system's counting deviates from Born weights.
inline double quadratic_spread_ratio(double tau_eff, double t0) {
  if (!(tau_eff >= 0.0) || !(t0 > 0.0))
    throw ConfigError("quadratic spread ratio needs tau_eff >= 0 and t0 > 0");
  const double r = tau_eff / t0;
  return 3.0 * r * r;
}

// Count-weighted energy sample across branches.
struct EnergySample {
  double weight = 1.0;  // relative sub-branch count
  double energy = 0.0;  // joule
};

// Anomalous mean-energy drift rate: epsilon Var_C(H) / hbar, with Var_C the
// count-weighted variance over branches (two-pass for stability).
inline double energy_drift_rate(double epsilon, const std::vector<EnergySample>& samples,
                                double hbar = kHbar) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (samples.empty()) throw ConfigError("energy drift needs at least one sample");
  double wsum = 0.0, mean = 0.0;
  for (const auto& s : samples) {
    if (!(s.weight >= 0.0)) throw ConfigError("sample weights must be non-negative");
    wsum += s.weight;
    mean += s.weight * s.energy;
  }
  if (!(wsum > 0.0)) throw ConfigError("sample weights sum to zero");
  mean /= wsum;
  double var = 0.0;
  for (const auto& s : samples) var += s.weight * (s.energy - mean) * (s.energy - mean);
  var /= wsum;
  return epsilon * var / hbar;
}

// --- N-particle dephased event stream ---------------------------------------

// Merged branching events of N effectively independent single-particle
// clocks.  Dephasing means each particle's level sits at an unrelated point
// of its cycle, modeled as a deterministic seeded draw: the phase is uniform
// over one mean cycle and every subsequent interval is tau1 |ln Z| or
// tau1 |ln(1-Z)| by a fair pseudo-random bit (the two children of a split
// carry equal counts).  For z = 1/2 every interval is exactly T = tau1 ln 2.
struct MultiparticleStream {
  std::vector<double> events;  // merged, ascending
  double mean_interval = 0.0;
};

// Mean per-particle cycle: tau1 (|ln Z| + |ln(1-Z)|) / 2.
inline double mean_cycle(const SplitParameter& sp, double tau1) {
  return 0.5 * tau1 * (-sp.log_z - sp.log_one_minus_z);
}

// Horizon long enough that N particles yield at least `events` merged events.
inline double horizon_for_events(int n_particles, const SplitParameter& sp, double tau1,
                                 std::uint64_t events) {
  return mean_cycle(sp, tau1) *
         (static_cast<double>(events) / n_particles + 3.0);
}

inline MultiparticleStream multiparticle_stream(int n_particles, const SplitParameter& sp,
                                                double tau1, std::uint64_t seed,
                                                double horizon) {
  if (n_particles < 1) throw ConfigError("particle count must be >= 1");
  if (!(tau1 > 0.0) || !(horizon > 0.0)) throw ConfigError("tau1 and horizon must be > 0");
  MultiparticleStream out;
  const double cycle = mean_cycle(sp, tau1);
  for (int i = 0; i < n_particles; ++i) {
    // Distinct, decorrelated generator per particle (splitmix64 of seed ^ i).
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(i) + 1));
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    std::mt19937_64 rng(x);
    auto uniform = [&rng]() {
      return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    double t = uniform() * cycle;  // phase: first crossing within one cycle
    while (t <= horizon) {
      out.events.push_back(t);
      const bool fresh_side = (rng() >> 63) != 0;
      t += tau1 * (fresh_side ? -sp.log_z : -sp.log_one_minus_z);
    }
  }
  std::sort(out.events.begin(), out.events.end());
  if (out.events.size() >= 2)
    out.mean_interval = (out.events.back() - out.events.front()) /
                        static_cast<double>(out.events.size() - 1);
  return out;
}

}  // namespace branchsim
