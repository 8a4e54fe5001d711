#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <span>
#include <utility>

namespace evostab {

/// ln(a + b) from ln a and ln b, pivoting on the larger argument.
inline double log_add(double la, double lb) {
  if (la < lb) std::swap(la, lb);
  if (la == -std::numeric_limits<double>::infinity()) return la;
  return la + std::log1p(std::exp(lb - la));
}

/// ln(sum exp(v_i)), pivoting on the maximum term.
inline double log_sum_exp(std::span<const double> values) {
  double pivot = -std::numeric_limits<double>::infinity();
  for (double v : values) pivot = std::max(pivot, v);
  if (!std::isfinite(pivot)) return pivot;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - pivot);
  return pivot + std::log(acc);
}

/// A nonnegative magnitude held as its natural logarithm. The zero magnitude
/// is represented by a log value of -inf.
class LogMagnitude {
 public:
  constexpr LogMagnitude() = default;

  static constexpr LogMagnitude from_log(double log_value) { return LogMagnitude(log_value); }
  static LogMagnitude from_linear(double value) { return LogMagnitude(std::log(value)); }
  static constexpr LogMagnitude zero() {
    return LogMagnitude(-std::numeric_limits<double>::infinity());
  }
  static constexpr LogMagnitude one() { return LogMagnitude(0.0); }

  constexpr double log_value() const { return log_; }
  constexpr bool is_zero() const { return log_ == -std::numeric_limits<double>::infinity(); }

  // May overflow to +inf; callers that only compare should stay in log form.
  double to_linear() const { return std::exp(log_); }

  LogMagnitude pow(double p) const { return is_zero() ? zero() : LogMagnitude(p * log_); }

  friend LogMagnitude operator*(LogMagnitude a, LogMagnitude b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return LogMagnitude(a.log_ + b.log_);
  }
  friend LogMagnitude operator/(LogMagnitude a, LogMagnitude b) {
    if (a.is_zero()) return zero();
    return LogMagnitude(a.log_ - b.log_);
  }
  friend LogMagnitude operator+(LogMagnitude a, LogMagnitude b) {
    return LogMagnitude(log_add(a.log_, b.log_));
  }
  LogMagnitude& operator+=(LogMagnitude other) { return *this = *this + other; }
  LogMagnitude& operator*=(LogMagnitude other) { return *this = *this * other; }

  friend constexpr auto operator<=>(LogMagnitude a, LogMagnitude b) { return a.log_ <=> b.log_; }
  friend constexpr bool operator==(LogMagnitude a, LogMagnitude b) { return a.log_ == b.log_; }

 private:
  constexpr explicit LogMagnitude(double log_value) : log_(log_value) {}

  double log_ = -std::numeric_limits<double>::infinity();
};

}  // namespace evostab
