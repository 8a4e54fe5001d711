#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "evostab/operators.hpp"

namespace evostab {

inline constexpr double kDefaultPanelWidth = 1.0 / 64.0;

/// Cumulative log-integral of ||U(tau,t0)x0||^p sampled at knots.
struct CumulativeTable {
  std::vector<double> knots;
  /// ln of the integral from knots.front() to each knot; -inf at the first knot.
  std::vector<double> cumlog;
  /// ln ||U(knot, t0) x0|| at each knot.
  std::vector<double> orbit_log;
  double p = 1.0;
  double t0 = 0.0;
  /// Estimated relative error of the integral, i.e. absolute error of cumlog,
  /// maximised over the knots.
  double quad_error = 0.0;
};

struct QuadratureOptions {
  /// Raise AccuracyError when quad_error exceeds this.
  double error_ceiling = std::numeric_limits<double>::infinity();
  /// Panels whose step-halving difference exceeds refine_tol times the running
  /// integral are bisected, up to this depth. Depth 0 disables refinement.
  int max_refine_depth = 24;
  double refine_tol = 1e-10;
};

/// Composite Simpson quadrature of e^{p * orbit_log_norm} on the panels of
/// `grid`, accumulated in log form. The grid must start at t0.
CumulativeTable log_integral_power(const EvolutionOperator& op, double t0, const Vector& x0,
                                   double p, std::span<const double> grid,
                                   const QuadratureOptions& options = {});

/// As log_integral_power, for an integration range starting at grid.front() >= t0.
CumulativeTable log_integral_power_from(const EvolutionOperator& op, double t0, const Vector& x0,
                                        double p, std::span<const double> grid,
                                        const QuadratureOptions& options = {});

/// Equal panels of width <= panel_width over [start, stop], merged with the
/// given breakpoints. Always contains start and stop.
std::vector<double> make_grid(double start, double stop, double panel_width,
                              std::span<const double> breakpoints = {});

/// make_grid with the operator's own breakpoints.
std::vector<double> knot_aware_grid(const EvolutionOperator& op, double start, double stop,
                                    double panel_width = kDefaultPanelWidth);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  /// Maximum absolute deviation of the points from the fitted line.
  double residual = 0.0;
};

/// Ordinary least squares through (time, log-magnitude) points.
LineFit fit_log_slope(std::span<const std::pair<double, double>> points);

/// CSV with header `t,cum_log_integral`.
void write_cumulative_csv(std::ostream& out, const CumulativeTable& table);

}  // namespace evostab
