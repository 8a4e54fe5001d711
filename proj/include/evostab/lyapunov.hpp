#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "evostab/numerics.hpp"
#include "evostab/operators.hpp"

namespace evostab {

/// Sampled L(t) = -int_{t0}^{t} ||U(tau,t0)x0||^2 dtau, stored as ln|L|.
struct LyapunovTable {
  double t0 = 0.0;
  Vector probe;
  std::vector<double> knots;
  /// ln|L(knot)|; -inf at t0 where L = 0.
  std::vector<double> log_abs;
  /// ln ||U(knot,t0)x0||.
  std::vector<double> orbit_log;
  double m = 0.5;
  /// Relative error estimate of |L|, maximised over the knots.
  double quad_error = 0.0;

  double value(std::size_t i) const;
  std::size_t index_of(double t) const;
};

/// Bound constant N^2 / (2 nu) from a weak certificate.
double lyapunov_bound_constant(double n, double nu);

/// Knots must start at t0 and ascend. The integral runs on a refined grid
/// (knots plus default panels) and is sampled at the knots.
LyapunovTable build_lyapunov(const EvolutionOperator& op, double t0, const Vector& x0,
                             std::span<const double> knots, double m,
                             const QuadratureOptions& quad = {});

/// CSV `t,L_value_neglog` holding -ln|L|.
void write_lyapunov_csv(std::ostream& out, const LyapunovTable& table);

struct EquationResidual {
  double t = 0.0;
  double s = 0.0;
  /// |L(t) + int_s^t ||U||^2 - L(s)|.
  double residual = 0.0;
  /// tol + (table + independent quad error + operator accuracy) * |L(t)|.
  double allowed = 0.0;
  /// Independent quadrature error estimate of the middle integral.
  double quad_error = 0.0;
};

struct EquationReport {
  bool pass = true;
  double tol = 0.0;
  double max_residual = 0.0;
  /// max residual / |L(t)| over pairs with L(t) != 0.
  double max_relative = 0.0;
  double table_quad_error = 0.0;
  double independent_quad_error = 0.0;
  std::vector<EquationResidual> residuals;
  std::optional<EquationResidual> worst;
};

/// (t, s) pairs on the table knots, t >= s >= t0. The middle integral is
/// recomputed on a grid offset by half a panel from the table's own grid.
EquationReport verify_lyapunov_equation(const LyapunovTable& table, const EvolutionOperator& op,
                                        std::span<const std::pair<double, double>> pairs, double tol,
                                        const QuadratureOptions& quad = {});

/// Ordered pairs (t, s), t >= s, over an evenly thinned subset of the knots,
/// about max_pairs in total.
std::vector<std::pair<double, double>> knot_pairs(const LyapunovTable& table, std::size_t max_pairs = 256);

struct BoundWitness {
  double t = 0.0;
  /// ln|L(t)| - ln(m ||U(t,t0)x0||^2).
  double log_violation = 0.0;
};

struct BoundReport {
  bool pass = true;
  double m = 0.0;
  double max_violation = -std::numeric_limits<double>::infinity();
  std::optional<BoundWitness> worst;
  std::size_t points = 0;
};

/// |L(t)| <= m ||U(t,t0)x0||^2 at every grid time (grid on the knots). The
/// orbit norm is evaluated afresh from the operator.
BoundReport verify_lyapunov_bound(const LyapunovTable& table, const EvolutionOperator& op, double m,
                                  std::span<const double> grid, double log_tol = 1e-12);

struct LyapunovDatko {
  double p = 2.0;
  double k = 0.0;
  std::vector<double> times;
  /// ln(|L(t)| / ||U(t,t0)x0||^2).
  std::vector<double> log_ratio;
  double log_k_measured = -std::numeric_limits<double>::infinity();
  bool bounded = false;
};

/// Datko ratio series implied by the table, with K = m. Throws
/// PreconditionError unless `equation` passed.
LyapunovDatko lyapunov_to_datko(const LyapunovTable& table, const EquationReport& equation, double m,
                                double log_tol = 1e-12);

}  // namespace evostab
