#pragma once
// Log-domain measure arithmetic and split-parameter classification.
//
// Every sub-branch measure in this simulator is a product m0 * z^a * (1-z)^b,
// so measures are carried as natural logs keyed by the exact integer exponents
// (a, b).  Floating-point measure values are always derived, never used as map
// keys: float equality would silently merge or split classes.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

namespace branchsim {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Natural log of a non-negative measure; kLogZero encodes measure zero.
struct LogMeasure {
  double value = kLogZero;

  static LogMeasure from_linear(double m) {
    if (!(m >= 0.0)) throw std::domain_error("LogMeasure: measure must be >= 0");
    return {m == 0.0 ? kLogZero : std::log(m)};
  }
  double linear() const { return std::exp(value); }
  friend auto operator<=>(const LogMeasure&, const LogMeasure&) = default;
};

// ln(e^a + e^b), overflow-safe; exact when either side is log-zero.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  const double d = b - a;
  // e^d below double resolution: the smaller term cannot move the sum.
  if (d < -40.0) return a;
  return a + std::log1p(std::exp(d));
}

// Two-pass log-sum-exp: rescale by the maximum term, then compensated (Kahan)
// summation of the rescaled terms.  Permutation of inputs only moves the
// result at rounding level.
inline double log_sum_exp(std::span<const double> terms) {
  double m = kLogZero;
  for (double t : terms) m = std::max(m, t);
  if (m == kLogZero) return kLogZero;  // empty input or all log-zero
  double sum = 0.0, carry = 0.0;
  for (double t : terms) {
    const double y = std::exp(t - m) - carry;
    const double s = sum + y;
    carry = (s - sum) - y;
    sum = s;
  }
  return m + std::log(sum);
}

enum class RatioClass { kRational, kIrrational };

struct RatioClassification {
  RatioClass kind = RatioClass::kIrrational;
  std::int64_t num = 0;  // reduced m of m/n when rational
  std::int64_t den = 0;  // reduced n of m/n when rational
};

// Continued-fraction detection of a rational ratio m/n.
//
// A convergent p/q is accepted only when it is both inside `tolerance` and
// anomalously good for its size: |x - p/q| * q^2 < 1/100.  Values that really
// are rational up to float noise terminate at ~1e-16 * q^2 ≤ 1e-4 and pass;
// hard-to-approximate irrationals like the golden ratio sit at ≈ 0.447/q^2 on
// every convergent and are rejected at any tolerance, which keeps e.g. a 1e-9
// tolerance from being defeated by a lucky 5-digit denominator.
inline RatioClassification classify_ratio(double ratio, double tolerance,
                                          std::int64_t max_denominator) {
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw std::domain_error("classify_ratio: ratio must be finite and > 0");
  std::int64_t p_prev = 1, q_prev = 0;
  std::int64_t p = static_cast<std::int64_t>(std::floor(ratio)), q = 1;
  double frac = ratio - std::floor(ratio);
  for (int depth = 0; depth < 64; ++depth) {
    if (q > max_denominator) break;
    const double err = std::abs(ratio - static_cast<double>(p) / static_cast<double>(q));
    if (err <= tolerance && err * static_cast<double>(q) * static_cast<double>(q) < 1e-2)
      return {RatioClass::kRational, p, q};
    if (frac < 1e-18) break;  // expansion terminated without acceptance
    const double inv = 1.0 / frac;
    const double af = std::floor(inv);
    if (af > 9e18) break;
    const auto a = static_cast<std::int64_t>(af);
    frac = inv - af;
    const std::int64_t pn = a * p + p_prev;
    const std::int64_t qn = a * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
  }
  return {RatioClass::kIrrational, 0, 0};
}

// Split fraction z plus everything derived from it that the engines reuse on
// every event: the two log factors and the classified log-ratio.
struct SplitParameter {
  double z = 0.5;
  double log_z = 0.0;            // ln z           (< 0)
  double log_one_minus_z = 0.0;  // ln (1-z)       (< 0)
  double ratio = 1.0;            // ln z / ln (1-z)
  RatioClassification ratio_class;
};

inline SplitParameter make_split_parameter(double z, double ratio_tolerance = 1e-9,
                                           std::int64_t max_denominator = 1'000'000) {
  if (!(z > 0.0) || !(z < 1.0))
    throw std::domain_error("make_split_parameter: z must lie in (0, 1)");
  if (!(ratio_tolerance > 0.0))
    throw std::domain_error("make_split_parameter: ratio tolerance must be > 0");
  SplitParameter sp;
  sp.z = z;
  sp.log_z = std::log(z);
  sp.log_one_minus_z = std::log1p(-z);
  sp.ratio = sp.log_z / sp.log_one_minus_z;
  sp.ratio_class = classify_ratio(sp.ratio, ratio_tolerance, max_denominator);
  return sp;
}

// The split fraction whose log-ratio is the golden ratio:
//   ln z* = phi * ln(1 - z*),  phi = (1 + sqrt 5)/2,
// found by bisection on (0.3, 0.5).  z* ≈ 0.4168 and the ratio classifies as
// irrational at any sane tolerance (golden-ratio convergents are the
// worst-approximating ones there are).
inline SplitParameter golden_split(double ratio_tolerance = 1e-9) {
  constexpr double phi = std::numbers::phi_v<double>;
  auto f = [](double z) { return std::log(z) - phi * std::log1p(-z); };
  double lo = 0.3, hi = 0.5;
  for (int i = 0; i < 200 && (hi - lo) > 1e-17; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return make_split_parameter(0.5 * (lo + hi), ratio_tolerance);
}

// Identifies one aggregated class: all sub-branches descending from initial
// population `component` that took the fresh-branch side `a` times and the
// residual side `b` times.  They share one measure and one event time.
struct ClassKey {
  std::int32_t component = 0;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  friend auto operator<=>(const ClassKey&, const ClassKey&) = default;
};

struct ClassKeyHash {
  std::size_t operator()(const ClassKey& k) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.component)) << 42) ^
                      (static_cast<std::uint64_t>(k.a) << 21) ^ k.b;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

inline LogMeasure class_measure(const ClassKey& k, LogMeasure m0, const SplitParameter& sp) {
  return {m0.value + static_cast<double>(k.a) * sp.log_z +
          static_cast<double>(k.b) * sp.log_one_minus_z};
}

// Time at which a sub-branch of measure m crosses the unit threshold:
// m * g * e^{t/tau} = 1, so t = -tau * (ln m + ln g).
inline double branch_time_log(double log_m, double log_g, double tau) {
  double s = log_m + log_g;
  if (s > 1e-12) throw std::domain_error("branch_time: level already above threshold");
  if (s >= 0.0) return 0.0;  // at threshold (swallowing rounding), avoid -0.0
  return -tau * s;
}

inline double branch_time(LogMeasure m, double g, double tau) {
  if (!(g > 0.0)) throw std::domain_error("branch_time: growth prefactor must be > 0");
  return branch_time_log(m.value, std::log(g), tau);
}

}  // namespace branchsim
