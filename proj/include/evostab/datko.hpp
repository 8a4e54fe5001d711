#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evostab/certify.hpp"
#include "evostab/numerics.hpp"
#include "evostab/operators.hpp"

namespace evostab {

/// ratio(t) = int_{t0}^{t} ||U(tau,t0)x0||^p dtau / ||U(t,t0)x0||^p, in log form.
struct RatioScan {
  double t0 = 0.0;
  double p = 1.0;
  std::vector<double> times;
  /// -inf at t = t0 (empty integral).
  std::vector<double> log_ratio;
  double log_k_measured = -std::numeric_limits<double>::infinity();
  double t_at_max = 0.0;
  double quad_error = 0.0;
};

/// t0, t0 + step, ..., t0 + horizon.
std::vector<double> horizon_times(double t0, double horizon, double step);

/// Ratio series on `times`, which must start at t0.
RatioScan datko_ratio_scan(const EvolutionOperator& op, const Vector& x0, double t0, double p,
                           std::span<const double> times, const QuadratureOptions& quad = {});

void write_ratio_csv(std::ostream& out, const RatioScan& scan);

enum class DatkoVerdict { bounded, unbounded_trend, inconclusive };
std::string to_string(DatkoVerdict v);

struct DatkoOptions {
  double p = 1.0;
  double k_ceiling = 1.0;
  /// Candidate start times; empty means the default certify grid.
  std::vector<double> t0_search;
  /// Optional start time per probe, tried in addition to t0_search.
  std::vector<double> t0_hints;
  /// Length of the scanned window after t0.
  double horizon = 20.0;
  double step = 0.25;
  QuadratureOptions quad;
};

struct DatkoProbe {
  std::size_t probe = 0;
  double t0 = 0.0;
  double log_k = -std::numeric_limits<double>::infinity();
  double t_at_max = 0.0;
  double log_ratio_end = -std::numeric_limits<double>::infinity();
  double log_ratio_three_quarter = -std::numeric_limits<double>::infinity();
  bool bounded = false;
  bool trend = false;
  bool degenerate = false;
  bool excluded = false;
  double quad_error = 0.0;
};

struct DatkoReport {
  double p = 1.0;
  double k_ceiling = 1.0;
  double horizon = 0.0;
  double step = 0.0;
  std::vector<double> t0_search;
  /// Largest per-probe measured constant (the per-probe start time minimises it).
  double log_k_measured = -std::numeric_limits<double>::infinity();
  DatkoVerdict verdict = DatkoVerdict::inconclusive;
  std::vector<DatkoProbe> per_probe;
  std::vector<double> t0_of;
  /// Probe attaining log_k_measured.
  std::optional<std::size_t> worst_probe;
  bool degenerate_horizon = false;
  double quad_error = 0.0;
};

/// Per probe, picks the start time minimising the measured constant. The
/// verdict is bounded when every probe stays within k_ceiling (widened by the
/// quadrature error estimate and the operator's accuracy), unbounded-trend
/// when a failing probe ends above the ceiling and above 1.5 times its ratio
/// at three quarters of the horizon, inconclusive otherwise.
DatkoReport datko_verdict(const EvolutionOperator& op, std::span<const Vector> probes,
                          const DatkoOptions& options);

/// Integral-criterion necessity constant N^p / (nu p).
double necessity_constant(double n, double nu, double p);

struct SufficiencyConstants {
  double l = 0.0;
  double k = 0.0;
  double p = 1.0;
  double m = 1.0;
  double omega = 1.0;

  /// f(tau) = L^{1/p} (1 + tau^{1/p}) / (1 + K^{1/p}).
  double growth(double tau) const;
  GrowthFunction growth_function(std::vector<double> knots) const;
};

/// L = min{ (1/(M^p K)) (1 - e^{-omega p})/(omega p), e^{-omega p}/M^p }.
SufficiencyConstants sufficiency_constants(double k, double p, double m, double omega);

/// ln of sum_{n=0}^{floor(t-t0)} ||U(t-n,t0)x0||^p.
double discrete_sum_scan(const EvolutionOperator& op, const Vector& x0, double t0, double p, double t);

/// Discrete sum divided by ||U(t,t0)x0||^p, in log form, at each time.
std::vector<double> discrete_log_ratios(const EvolutionOperator& op, const Vector& x0, double t0,
                                        double p, std::span<const double> times);

/// Discrete-criterion necessity constant N^p / (1 - e^{-nu p}).
double discrete_necessity_constant(double n, double nu, double p);

/// K M^p e^{omega p}.
double discrete_to_integral_bound(double k_discrete, double m, double omega, double p);

/// ln(K M^p e^{omega p}) for constants too large for a double.
double log_discrete_to_integral_bound(double log_k_discrete, double log_m, double omega, double p);

}  // namespace evostab
