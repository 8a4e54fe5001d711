#include "evostab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "evostab/errors.hpp"

namespace evostab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v == 0.0 ? kNegInf : std::log(v); }

void require_order(double t, double s) {
  if (!(s >= 0.0)) throw InputError("start time must be nonnegative");
  if (t < s) {
    std::ostringstream msg;
    msg << "time ordering violated: t = " << t << " < s = " << s;
    throw OrderingError(msg.str());
  }
}

void require_dimension(const EvolutionOperator& op, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != op.dimension()) {
    std::ostringstream msg;
    msg << "vector has " << x.size() << " components, operator '" << op.name()
        << "' expects " << op.dimension();
    throw InputError(msg.str());
  }
}

void require_ascending(std::span<const double> times) {
  if (!std::is_sorted(times.begin(), times.end())) throw InputError("times must be ascending");
}

// ---- closed forms ---------------------------------------------------------

struct PlanarCoordinates {
  double grow;   // component along (cos t0, sin t0)
  double decay;  // component along (sin t0, -cos t0)
};

PlanarCoordinates planar_coordinates(double t0, const Vector& x) {
  const double c = std::cos(t0);
  const double s = std::sin(t0);
  return {x(0) * c + x(1) * s, x(0) * s - x(1) * c};
}

Vector planar_evaluate(double t, double s, const Vector& x) {
  const auto [grow, decay] = planar_coordinates(s, x);
  const double up = std::exp(t - s);
  const double down = std::exp(-(t - s));
  Vector out(2);
  out(0) = up * std::cos(t) * grow + down * std::sin(t) * decay;
  out(1) = up * std::sin(t) * grow - down * std::cos(t) * decay;
  return out;
}

double planar_log_norm(double t, double t0, const Vector& x) {
  const auto [grow, decay] = planar_coordinates(t0, x);
  const double dt = t - t0;
  return 0.5 * log_add(2.0 * dt + 2.0 * safe_log(std::abs(grow)),
                       -2.0 * dt + 2.0 * safe_log(std::abs(decay)));
}

// ---- ODE propagation --------------------------------------------------------

namespace odeint = boost::numeric::odeint;
using OdeState = std::vector<double>;

constexpr double kRescaleHigh = 1e64;
constexpr double kRescaleLow = 1e-64;

// Propagates y(s) = exp(log_scale) * start through the ascending `times`
// (all >= s) and hands each sample to visit(index, scaled_state, log_scale).
// The state is renormalized whenever its norm leaves [1e-64, 1e64].
template <class Visit>
void propagate(const OdeFlow& flow, double s, const Vector& start, double log_scale,
               std::span<const double> times, Visit&& visit) {
  const auto n = static_cast<std::size_t>(start.size());
  std::size_t next = 0;
  while (next < times.size() && times[next] <= s) visit(next++, start, log_scale);
  if (next == times.size()) return;
  if (start.norm() == 0.0) {
    while (next < times.size()) visit(next++, start, log_scale);
    return;
  }

  auto rhs = [&flow, n](const OdeState& x, OdeState& dxdt, double t) {
    const Matrix a = flow.coefficient(t);
    Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(n));
    Eigen::Map<Vector> dv(dxdt.data(), static_cast<Eigen::Index>(n));
    dv.noalias() = a * xv;
  };

  auto stepper = odeint::make_dense_output(flow.abs_tol, flow.rel_tol, flow.max_step,
                                           odeint::runge_kutta_dopri5<OdeState>());
  OdeState x(start.data(), start.data() + n);
  stepper.initialize(x, s, std::min(flow.max_step, 1e-2));

  OdeState sample(n);
  std::size_t steps = 0;
  while (true) {
    while (next < times.size() && times[next] <= stepper.current_time()) {
      stepper.calc_state(times[next], sample);
      visit(next++, Eigen::Map<const Vector>(sample.data(), static_cast<Eigen::Index>(n)),
            log_scale);
    }
    if (next == times.size()) return;

    const OdeState& current = stepper.current_state();
    const double norm =
        Eigen::Map<const Vector>(current.data(), static_cast<Eigen::Index>(n)).norm();
    if (!std::isfinite(norm)) {
      throw IntegrationError("non-finite state in ODE flow", stepper.current_time());
    }
    if (norm > kRescaleHigh || (norm < kRescaleLow && norm > 0.0)) {
      OdeState scaled(current);
      for (double& v : scaled) v /= norm;
      log_scale += std::log(norm);
      stepper.initialize(scaled, stepper.current_time(), stepper.current_time_step());
    }
    try {
      stepper.do_step(rhs);
    } catch (const odeint::step_adjustment_error&) {
      throw IntegrationError("step size control failed", stepper.current_time());
    }
    if (++steps > flow.max_steps) {
      throw IntegrationError("step budget exhausted", stepper.current_time());
    }
  }
}

}  // namespace

// ---- LogProfile -------------------------------------------------------------

LogProfile LogProfile::from_knots(std::vector<Knot> knots) {
  if (knots.empty()) throw InputError("log-profile needs at least one knot");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].t > knots[i - 1].t)) throw InputError("log-profile knots must be strictly ascending");
  }
  for (const auto& k : knots) {
    if (!std::isfinite(k.t) || !std::isfinite(k.value)) throw InputError("log-profile knot is not finite");
  }
  LogProfile profile;
  profile.knots_ = std::move(knots);
  return profile;
}

LogProfile LogProfile::spikes() {
  LogProfile profile;
  profile.spikes_ = true;
  return profile;
}

double LogProfile::operator()(double t) const {
  if (spikes_) {
    if (t < 2.0) return 0.0;
    const double n = std::floor(t);
    const double u = t - n;
    if (u <= 1.0 / n) return n * n * n * u;
    return n * n * n * (1.0 - u) / (n - 1.0);
  }
  if (t <= knots_.front().t) return knots_.front().value;
  if (t >= knots_.back().t) return knots_.back().value;
  const auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const Knot& k) { return v < k.t; });
  const auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return lo->value + w * (hi->value - lo->value);
}

std::vector<double> LogProfile::breakpoints(double lo, double hi) const {
  std::vector<double> out;
  if (hi < lo) return out;
  if (spikes_) {
    const double first = std::max(2.0, std::floor(lo));
    for (double n = first; n <= hi; n += 1.0) {
      for (double b : {n, n + 1.0 / n}) {
        if (b >= lo && b <= hi) out.push_back(b);
      }
    }
    return out;
  }
  for (const auto& k : knots_) {
    if (k.t >= lo && k.t <= hi) out.push_back(k.t);
  }
  return out;
}

// ---- kernels ----------------------------------------------------------------

ScalarKernel exponential_kernel(double rate) {
  ScalarKernel kernel;
  kernel.log_amplitude = [rate](double t, double s) { return rate * (t - s); };
  std::ostringstream d;
  d << "exp(" << rate << "*(t-s))";
  kernel.description = d.str();
  return kernel;
}

ScalarKernel profile_kernel(LogProfile profile, double rate) {
  ScalarKernel kernel;
  kernel.log_amplitude = [profile, rate](double t, double s) {
    return profile(s) - profile(t) + rate * (t - s);
  };
  kernel.profile = std::move(profile);
  std::ostringstream d;
  d << "u(s)/u(t)*exp(" << rate << "*(t-s))";
  kernel.description = d.str();
  return kernel;
}

Matrix planar_rotation_coefficient(double t) {
  const double c = std::cos(2.0 * t);
  const double s = std::sin(2.0 * t);
  Matrix a(2, 2);
  a << c, s - 1.0,
       1.0 + s, -c;
  return a;
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::scalar_kernel: return "ScalarKernel";
    case OperatorKind::planar_rotation: return "PlanarRotation";
    case OperatorKind::ode_flow: return "OdeFlow";
  }
  return "unknown";
}

// ---- EvolutionOperator ------------------------------------------------------

EvolutionOperator::EvolutionOperator(std::string name, std::size_t dimension, Impl impl)
    : name_(std::move(name)), dimension_(dimension), impl_(std::move(impl)) {
  if (dimension_ == 0) throw InputError("operator dimension must be positive");
  if (std::holds_alternative<PlanarRotation>(impl_) && dimension_ != 2) {
    throw InputError("planar rotation is two-dimensional");
  }
  if (const auto* k = std::get_if<ScalarKernel>(&impl_); k && !k->log_amplitude) {
    throw InputError("scalar kernel without log-amplitude");
  }
  if (const auto* f = std::get_if<OdeFlow>(&impl_)) {
    if (!f->coefficient) throw InputError("ODE flow without coefficient");
    if (!(f->rel_tol > 0.0) || !(f->abs_tol > 0.0) || !(f->max_step > 0.0)) {
      throw InputError("ODE flow step control parameters must be positive");
    }
  }
}

OperatorKind EvolutionOperator::kind() const {
  switch (impl_.index()) {
    case 0: return OperatorKind::scalar_kernel;
    case 1: return OperatorKind::planar_rotation;
    default: return OperatorKind::ode_flow;
  }
}

std::vector<double> EvolutionOperator::breakpoints(double lo, double hi) const {
  if (const auto* k = std::get_if<ScalarKernel>(&impl_); k && k->profile) {
    return k->profile->breakpoints(lo, hi);
  }
  return {};
}

Vector evaluate(const EvolutionOperator& op, double t, double s, const Vector& x) {
  require_order(t, s);
  require_dimension(op, x);
  return std::visit(
      [&](const auto& impl) -> Vector {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, ScalarKernel>) {
          return std::exp(impl.log_amplitude(t, s)) * x;
        } else if constexpr (std::is_same_v<T, PlanarRotation>) {
          return planar_evaluate(t, s, x);
        } else {
          Vector out = x;
          const double when[] = {t};
          propagate(impl, s, x, 0.0, when, [&](std::size_t, const auto& y, double log_scale) {
            out = std::exp(log_scale) * Vector(y);
          });
          return out;
        }
      },
      op.impl());
}

LogMagnitude orbit_log_norm(const EvolutionOperator& op, double t, double t0, const Vector& x0) {
  require_order(t, t0);
  require_dimension(op, x0);
  const double norm0 = x0.norm();
  if (norm0 == 0.0) return LogMagnitude::zero();
  return std::visit(
      [&](const auto& impl) -> LogMagnitude {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, ScalarKernel>) {
          return LogMagnitude::from_log(impl.log_amplitude(t, t0) + std::log(norm0));
        } else if constexpr (std::is_same_v<T, PlanarRotation>) {
          return LogMagnitude::from_log(planar_log_norm(t, t0, x0));
        } else {
          const double when[] = {t};
          return LogMagnitude::from_log(orbit_log_norms(op, t0, x0, when).front());
        }
      },
      op.impl());
}

std::vector<double> orbit_log_norms(const EvolutionOperator& op, double t0, const Vector& x0,
                                    std::span<const double> times) {
  return OrbitSampler(op, t0, x0).log_norms(times);
}

// ---- OrbitSampler -----------------------------------------------------------

OrbitSampler::OrbitSampler(const EvolutionOperator& op, double t0, Vector x0)
    : op_(&op), t0_(t0), x0_(std::move(x0)), anchor_time_(t0) {
  require_order(t0, t0);
  require_dimension(op, x0_);
  anchor_state_ = x0_;
}

std::vector<double> OrbitSampler::log_norms(std::span<const double> times) const {
  require_ascending(times);
  if (!times.empty() && times.front() < anchor_time_) {
    require_order(times.front(), anchor_time_);
  }
  std::vector<double> out(times.size(), kNegInf);
  if (x0_.norm() == 0.0) return out;
  if (const auto* flow = std::get_if<OdeFlow>(&op_->impl())) {
    propagate(*flow, anchor_time_, anchor_state_, anchor_log_scale_, times,
              [&](std::size_t i, const auto& y, double log_scale) {
                out[i] = log_scale + safe_log(y.norm());
                if (i + 1 == times.size()) cache_.emplace(times[i], std::make_pair(Vector(y), log_scale));
              });
    return out;
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i] = orbit_log_norm(*op_, times[i], t0_, x0_).log_value();
  }
  return out;
}

void OrbitSampler::advance(double t) {
  require_order(t, anchor_time_);
  if (std::holds_alternative<OdeFlow>(op_->impl()) && x0_.norm() != 0.0 && t != anchor_time_) {
    if (!cache_ || cache_->first != t) {
      const double when[] = {t};
      (void)log_norms(when);
    }
    anchor_state_ = cache_->second.first;
    anchor_log_scale_ = cache_->second.second;
  }
  cache_.reset();
  anchor_time_ = t;
}

// ---- axioms -----------------------------------------------------------------

namespace {

// U(t, s) x at every grid time t >= s, indexed like the grid.
std::vector<Vector> evaluate_along(const EvolutionOperator& op, std::span<const double> grid,
                                   std::size_t from, const Vector& x) {
  std::vector<Vector> out(grid.size());
  const double s = grid[from];
  if (const auto* flow = std::get_if<OdeFlow>(&op.impl())) {
    propagate(*flow, s, x, 0.0, grid.subspan(from),
              [&](std::size_t i, const auto& y, double log_scale) {
                out[from + i] = std::exp(log_scale) * Vector(y);
              });
    // U(s,s) is the identity by construction of the propagation.
    return out;
  }
  for (std::size_t i = from; i < grid.size(); ++i) out[i] = evaluate(op, grid[i], s, x);
  return out;
}

}  // namespace

AxiomReport verify_axioms(const EvolutionOperator& op, std::span<const double> grid,
                          std::span<const Vector> probes, double tol) {
  if (grid.empty()) throw InputError("axiom check needs a non-empty grid");
  if (probes.empty()) throw InputError("axiom check needs at least one probe");
  if (!(tol >= 0.0)) throw InputError("tolerance must be nonnegative");
  require_ascending(grid);
  for (const auto& x : probes) require_dimension(op, x);

  AxiomReport report;
  report.tolerance = tol;
  const std::size_t n = grid.size();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Vector& x = probes[k];
    const double scale0 = std::max(1.0, x.norm());
    for (std::size_t i = 0; i < n; ++i) {
      const double e1 = (evaluate(op, grid[i], grid[i], x) - x).norm() / scale0;
      if (!report.identity_witness || e1 > report.identity_residual) {
        report.identity_residual = e1;
        report.identity_witness = AxiomWitness{grid[i], grid[i], grid[i], k, e1};
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      const auto direct = evaluate_along(op, grid, r, x);
      for (std::size_t i = r; i + 1 < n; ++i) {
        report.continuity_max_jump =
            std::max(report.continuity_max_jump, (direct[i + 1] - direct[i]).norm());
      }
      for (std::size_t s = r; s < n; ++s) {
        const auto composed = evaluate_along(op, grid, s, direct[s]);
        for (std::size_t t = s; t < n; ++t) {
          const double scale = std::max(1.0, direct[t].norm());
          double e2 = (composed[t] - direct[t]).norm() / scale;
          if (std::isnan(e2)) e2 = std::numeric_limits<double>::infinity();
          if (!report.cocycle_witness || e2 > report.cocycle_residual) {
            report.cocycle_residual = e2;
            report.cocycle_witness = AxiomWitness{grid[t], grid[s], grid[r], k, e2};
          }
        }
      }
    }
  }
  report.pass = report.identity_residual <= tol && report.cocycle_residual <= tol;
  return report;
}

// ---- corpus -----------------------------------------------------------------

std::vector<NamedOperator> corpus() {
  std::vector<NamedOperator> out;
  auto add = [&out](std::string name, std::size_t dim, EvolutionOperator::Impl impl) {
    out.push_back(NamedOperator{name, EvolutionOperator(name, dim, std::move(impl))});
  };
  add("uniform_growth", 1, exponential_kernel(1.0));
  add("stable", 1, exponential_kernel(-1.0));
  add("nonuniform_spikes", 1, profile_kernel(LogProfile::spikes(), 1.0));
  add("planar_rotation", 2, PlanarRotation{});
  OdeFlow flow;
  flow.coefficient = planar_rotation_coefficient;
  add("planar_rotation_ode", 2, flow);
  return out;
}

const EvolutionOperator& corpus_member(const std::string& name) {
  static const std::vector<NamedOperator> members = corpus();
  for (const auto& m : members) {
    if (m.name == name) return m.op;
  }
  throw InputError("unknown corpus member '" + name + "'");
}

double log_accuracy(const EvolutionOperator& op) {
  if (const auto* flow = std::get_if<OdeFlow>(&op.impl())) return flow->tolerance_budget;
  return 0.0;
}

}  // namespace evostab
