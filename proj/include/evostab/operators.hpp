#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "evostab/log_magnitude.hpp"

namespace evostab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A continuous log-profile t -> ln u(t), used by the ScalarKernel family
/// U(t,s)x = (u(s)/u(t)) e^{c(t-s)} x.
///
/// Two shapes are supported: an explicit piecewise-linear knot list (held
/// constant outside the first/last knot) and the closed-form spike train
/// with knots (n, 0), (n + 1/n, n^2), (n + 1, 0) for every integer n >= 2 and
/// ln u = 0 on [0, 2].
class LogProfile {
 public:
  struct Knot {
    double t;
    double value;
  };

  static LogProfile from_knots(std::vector<Knot> knots);
  static LogProfile spikes();
  static LogProfile flat() { return from_knots({{0.0, 0.0}}); }

  double operator()(double t) const;

  /// Breakpoints of the piecewise-linear shape within [lo, hi], ascending.
  std::vector<double> breakpoints(double lo, double hi) const;

  bool is_spikes() const { return spikes_; }
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  bool spikes_ = false;
  std::vector<Knot> knots_;
};

/// Closed-form scalar kernel: ||U(t,s)x|| = e^{a(t,s)} ||x||.
struct ScalarKernel {
  std::function<double(double t, double s)> log_amplitude;
  std::optional<LogProfile> profile;
  std::string description;
};

ScalarKernel exponential_kernel(double rate);
ScalarKernel profile_kernel(LogProfile profile, double rate = 1.0);

/// The fixed two-dimensional operator whose orbits grow like e^{t-t0} along
/// (cos t0, sin t0) and decay like e^{-(t-t0)} along (-sin t0, cos t0).
struct PlanarRotation {};

/// Evolution operator of x' = A(t) x, propagated numerically.
struct OdeFlow {
  std::function<Matrix(double)> coefficient;
  double abs_tol = 1e-12;
  double rel_tol = 1e-9;
  double max_step = 0.25;
  std::size_t max_steps = 5'000'000;
  /// Relative cocycle residual this flow promises on moderate grids.
  double tolerance_budget = 1e-6;
};

/// Coefficient matrix whose flow reproduces PlanarRotation.
Matrix planar_rotation_coefficient(double t);

enum class OperatorKind { scalar_kernel, planar_rotation, ode_flow };

std::string to_string(OperatorKind kind);

class EvolutionOperator {
 public:
  using Impl = std::variant<ScalarKernel, PlanarRotation, OdeFlow>;

  EvolutionOperator(std::string name, std::size_t dimension, Impl impl);

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dimension_; }
  OperatorKind kind() const;
  const Impl& impl() const { return impl_; }

  /// Points in [lo, hi] where the orbit norm is not smooth.
  std::vector<double> breakpoints(double lo, double hi) const;

 private:
  std::string name_;
  std::size_t dimension_;
  Impl impl_;
};

/// Log-scale accuracy of orbit norms: 0 for closed forms, the tolerance
/// budget for OdeFlow. Definitional checks widen their tolerance by this.
double log_accuracy(const EvolutionOperator& op);

/// U(t,s)x. Closed forms are evaluated directly; OdeFlow is propagated.
Vector evaluate(const EvolutionOperator& op, double t, double s, const Vector& x);

/// ln ||U(t,t0)x0|| without exponentiating the growth factor.
LogMagnitude orbit_log_norm(const EvolutionOperator& op, double t, double t0, const Vector& x0);

/// ln ||U(t,t0)x0|| at ascending times >= t0, in one pass.
std::vector<double> orbit_log_norms(const EvolutionOperator& op, double t0, const Vector& x0,
                                    std::span<const double> times);

/// Incremental orbit evaluation used by quadrature: evaluates log-norms at
/// times at or after a movable anchor. For OdeFlow the anchor carries the
/// propagated state so that repeated queries never restart from t0.
class OrbitSampler {
 public:
  OrbitSampler(const EvolutionOperator& op, double t0, Vector x0);

  double anchor() const { return anchor_time_; }
  std::vector<double> log_norms(std::span<const double> times) const;
  void advance(double t);

 private:
  const EvolutionOperator* op_;
  double t0_;
  Vector x0_;
  double anchor_time_;
  Vector anchor_state_;
  double anchor_log_scale_ = 0.0;
  mutable std::optional<std::pair<double, std::pair<Vector, double>>> cache_;
};

struct AxiomWitness {
  double t = 0.0;
  double s = 0.0;
  double r = 0.0;
  std::size_t probe = 0;
  double residual = 0.0;
};

struct AxiomReport {
  double identity_residual = 0.0;   // e1
  double cocycle_residual = 0.0;    // e2
  double continuity_max_jump = 0.0; // e3 proxy, sampled only
  double tolerance = 0.0;
  std::optional<AxiomWitness> identity_witness;
  std::optional<AxiomWitness> cocycle_witness;
  bool pass = true;
};

/// Samples the evolution axioms on a time grid. Residuals are measured
/// relative to max(1, ||U(t,r)x||) for unit-scale probes.
AxiomReport verify_axioms(const EvolutionOperator& op, std::span<const double> grid,
                          std::span<const Vector> probes, double tol);

struct NamedOperator {
  std::string name;
  EvolutionOperator op;
};

/// The built-in operators: uniform_growth, stable, nonuniform_spikes,
/// planar_rotation and planar_rotation_ode.
std::vector<NamedOperator> corpus();
const EvolutionOperator& corpus_member(const std::string& name);

}  // namespace evostab
