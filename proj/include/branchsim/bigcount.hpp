#pragma once
// Sub-branch tallies that outgrow every fixed-width integer.
//
// Class counts follow binomial growth and reach e^8000 over a long run, so a
// count is held exactly (arbitrary-precision integer) while it is small enough
// to be cheap, and demoted once to a log-domain double after that.  The demote
// threshold is a bit budget, not a value: comparisons and additions on cpp_int
// stay O(limbs), so capping limbs caps per-event cost.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "branchsim/measure.hpp"

namespace branchsim {

using BigInt = boost::multiprecision::cpp_int;

// ln(n) for arbitrary-size positive n.  Small values convert exactly; larger
// ones use the top 53 bits as mantissa plus bit-length * ln 2.
inline double log_of_bigint(const BigInt& n) {
  if (n <= 0) throw std::domain_error("log_of_bigint: argument must be > 0");
  const auto bits = static_cast<std::int64_t>(boost::multiprecision::msb(n)) + 1;
  if (bits <= 900) return std::log(n.convert_to<double>());
  const BigInt top = n >> (bits - 53);
  return std::log(top.convert_to<double>()) +
         static_cast<double>(bits - 53) * std::numbers::ln2_v<double>;
}

class BigCount {
 public:
  BigCount() = default;
  explicit BigCount(std::uint64_t n, unsigned bit_budget = kDefaultBitBudget)
      : exact_(n), bit_budget_(bit_budget) {}
  explicit BigCount(BigInt n, unsigned bit_budget = kDefaultBitBudget)
      : exact_(std::move(n)), bit_budget_(bit_budget) {
    maybe_demote();
  }

  static BigCount from_log(double log_value, unsigned bit_budget = kDefaultBitBudget) {
    BigCount c;
    c.bit_budget_ = bit_budget;
    c.is_exact_ = false;
    c.log_ = log_value;
    return c;
  }

  bool is_exact() const { return is_exact_; }
  bool is_zero() const { return is_exact_ ? exact_.is_zero() : log_ == kLogZero; }

  // ln(count); kLogZero for zero.
  double log_value() const {
    if (!is_exact_) return log_;
    return exact_.is_zero() ? kLogZero : log_of_bigint(exact_);
  }

  // Exact value; throws after demotion since the information is gone.
  const BigInt& exact_value() const {
    if (!is_exact_) throw std::logic_error("BigCount: exact value requested after demotion");
    return exact_;
  }

  double to_double() const {
    if (is_exact_) return exact_.convert_to<double>();
    return std::exp(log_);
  }

  BigCount& operator+=(const BigCount& o) {
    if (is_exact_ && o.is_exact_) {
      exact_ += o.exact_;
      maybe_demote();
      return *this;
    }
    if (is_exact_) demote();
    log_ = log_add(log_, o.log_value());
    return *this;
  }

  friend BigCount operator+(BigCount a, const BigCount& b) { return a += b; }

  // Equality is only meaningful while both sides are exact (used by tests and
  // the exact-vs-aggregated cross-checks).
  friend bool operator==(const BigCount& a, const BigCount& b) {
    if (a.is_exact_ && b.is_exact_) return a.exact_ == b.exact_;
    return a.log_value() == b.log_value();
  }

  std::string to_string() const {
    if (is_exact_) return exact_.str();
    return "~exp(" + std::to_string(log_) + ")";
  }

  static constexpr unsigned kDefaultBitBudget = 256;

 private:
  void maybe_demote() {
    if (!exact_.is_zero() &&
        boost::multiprecision::msb(exact_) + 1 > bit_budget_)
      demote();
  }
  void demote() {
    log_ = exact_.is_zero() ? kLogZero : log_of_bigint(exact_);
    exact_ = 0;
    is_exact_ = false;
  }

  BigInt exact_ = 0;
  double log_ = kLogZero;
  unsigned bit_budget_ = kDefaultBitBudget;
  bool is_exact_ = true;
};

}  // namespace branchsim
