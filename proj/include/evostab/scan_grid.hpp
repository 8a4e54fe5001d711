#pragma once

#include <limits>
#include <string>
#include <vector>

#include "evostab/operators.hpp"

namespace evostab {

/// start, start + step, ... up to stop (inclusive within rounding).
std::vector<double> uniform_points(double start, double step, double stop);

/// Finite scan over start times t0 and sample times t0 + k*step. Three-time
/// checks use pairs s <= t with s - t0 <= s_span and t - s <= d_span; two-time
/// checks use (t0, t) with t - t0 <= s_span + d_span.
struct ScanGrid {
  std::vector<double> t0s;
  double step = 0.5;
  double s_span = 10.0;
  double d_span = 20.0;
  double t_max = std::numeric_limits<double>::infinity();
  /// Add the operator's breakpoints to the sample times.
  bool knot_aware = true;

  /// t0 in {0, 0.25, ..., 2*pi}, step 0.5, s - t0 <= 10, t - s <= 20.
  static ScanGrid defaults();

  std::vector<double> sample_times(const EvolutionOperator& op, double t0) const;

  void validate() const;
};

}  // namespace evostab
