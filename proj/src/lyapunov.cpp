#include "evostab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "evostab/csv.hpp"
#include "evostab/errors.hpp"
#include "evostab/parallel.hpp"

namespace evostab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t nearest(std::span<const double> grid, double t) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  std::size_t best = grid.size();
  double gap = kInf;
  for (auto cand : {it, it == grid.begin() ? it : it - 1}) {
    if (cand == grid.end()) continue;
    if (std::abs(*cand - t) < gap) {
      gap = std::abs(*cand - t);
      best = static_cast<std::size_t>(cand - grid.begin());
    }
  }
  if (best == grid.size() || gap > 1e-9 * std::max(1.0, std::abs(t))) {
    throw InputError("time is not a table knot");
  }
  return best;
}

}  // namespace

double LyapunovTable::value(std::size_t i) const { return -std::exp(log_abs.at(i)); }

std::size_t LyapunovTable::index_of(double t) const { return nearest(knots, t); }

double lyapunov_bound_constant(double n, double nu) {
  if (!(n >= 1.0) || !(nu > 0.0)) throw InputError("bound constant needs N >= 1, nu > 0");
  return n * n / (2.0 * nu);
}

LyapunovTable build_lyapunov(const EvolutionOperator& op, double t0, const Vector& x0,
                             std::span<const double> knots, double m, const QuadratureOptions& quad) {
  if (knots.empty() || knots.front() != t0) throw InputError("Lyapunov knots must start at t0");
  if (!std::is_sorted(knots.begin(), knots.end())) throw InputError("Lyapunov knots must ascend");
  if (!(m > 0.0) || !std::isfinite(m)) throw InputError("bound constant m must be positive");

  std::vector<double> marks = op.breakpoints(t0, knots.back());
  marks.insert(marks.end(), knots.begin(), knots.end());
  const auto grid = make_grid(t0, knots.back(), kDefaultPanelWidth, marks);
  const CumulativeTable cum = log_integral_power(op, t0, x0, 2.0, grid, quad);

  LyapunovTable table;
  table.t0 = t0;
  table.probe = x0;
  table.m = m;
  table.quad_error = cum.quad_error;
  table.knots.assign(knots.begin(), knots.end());
  for (double t : knots) {
    const std::size_t i = nearest(cum.knots, t);
    table.log_abs.push_back(cum.cumlog[i]);
    table.orbit_log.push_back(cum.orbit_log[i]);
  }
  return table;
}

void write_lyapunov_csv(std::ostream& out, const LyapunovTable& table) {
  std::vector<double> neglog;
  neglog.reserve(table.log_abs.size());
  for (double l : table.log_abs) neglog.push_back(-l);
  write_series_csv(out, "t,L_value_neglog", table.knots, neglog);
}

EquationReport verify_lyapunov_equation(const LyapunovTable& table, const EvolutionOperator& op,
                                        std::span<const std::pair<double, double>> pairs, double tol,
                                        const QuadratureOptions& quad) {
  if (!(tol >= 0.0)) throw InputError("tolerance must be >= 0");
  EquationReport report;
  report.tol = tol;
  report.table_quad_error = table.quad_error;
  for (const auto& [t, s] : pairs) {
    if (!(t >= s) || s < table.t0) throw InputError("pairs need t >= s >= t0");
    if (t > table.knots.back() + 1e-12 || s < table.knots.front()) throw InputError("pair outside the knot range");
  }

  const double h = kDefaultPanelWidth;
  const double accuracy = log_accuracy(op);
  report.residuals = parallel_map(pairs.size(), [&](std::size_t k) {
    const auto [t, s] = pairs[k];
    const std::size_t it = table.index_of(t);
    const std::size_t is = table.index_of(s);
    EquationResidual r{t, s, 0.0, tol, 0.0};
    const double lt = table.value(it);
    const double ls = table.value(is);
    double integral = 0.0;
    if (t > s) {
      std::vector<double> marks = op.breakpoints(s, t);
      for (double x = s + 0.5 * h; x < t; x += h) marks.push_back(x);
      const auto grid = make_grid(s, t, t - s, marks);
      const CumulativeTable cum = log_integral_power_from(op, table.t0, table.probe, 2.0, grid, quad);
      integral = std::exp(cum.cumlog.back());
      r.quad_error = cum.quad_error;
    }
    r.residual = std::abs(lt + integral - ls);
    r.allowed = tol + (table.quad_error + r.quad_error + accuracy) * std::abs(lt);
    return r;
  });

  for (const auto& r : report.residuals) {
    report.independent_quad_error = std::max(report.independent_quad_error, r.quad_error);
    report.max_residual = std::max(report.max_residual, r.residual);
    const double scale = std::abs(table.value(table.index_of(r.t)));
    if (scale > 0.0) report.max_relative = std::max(report.max_relative, r.residual / scale);
    if (r.residual > r.allowed) report.pass = false;
    const double excess = r.residual - r.allowed;
    if (!report.worst || excess > report.worst->residual - report.worst->allowed) report.worst = r;
  }
  return report;
}

std::vector<std::pair<double, double>> knot_pairs(const LyapunovTable& table, std::size_t max_pairs) {
  const std::size_t n = table.knots.size();
  // Thin the knots so that the number of ordered pairs stays near max_pairs.
  std::size_t stride = 1;
  while ((n / stride + 1) * (n / stride + 2) / 2 > max_pairs && stride < n) ++stride;
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < n; i += stride) picks.push_back(i);
  if (picks.back() != n - 1) picks.push_back(n - 1);
  std::vector<std::pair<double, double>> out;
  for (std::size_t a = 0; a < picks.size(); ++a) {
    for (std::size_t b = a; b < picks.size(); ++b) out.emplace_back(table.knots[picks[b]], table.knots[picks[a]]);
  }
  return out;
}

BoundReport verify_lyapunov_bound(const LyapunovTable& table, const EvolutionOperator& op, double m,
                                  std::span<const double> grid, double log_tol) {
  if (!(m > 0.0) || !std::isfinite(m)) throw InputError("bound constant m must be positive");
  BoundReport report;
  report.m = m;
  if (grid.empty()) return report;
  std::vector<std::size_t> idx;
  for (double t : grid) idx.push_back(table.index_of(t));
  std::vector<double> times;
  for (std::size_t i : idx) times.push_back(table.knots[i]);
  const auto norms = orbit_log_norms(op, table.t0, table.probe, times);
  const double log_m = std::log(m);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    ++report.points;
    const double lhs = table.log_abs[idx[k]];
    const double rhs = log_m + 2.0 * norms[k];
    if (lhs == -kInf) continue;
    const double v = lhs - rhs;
    if (v > report.max_violation) {
      report.max_violation = v;
      report.worst = BoundWitness{times[k], v};
    }
    const double tol = std::max(log_accuracy(op), log_tol * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
    if (v > tol + std::log1p(table.quad_error)) report.pass = false;
  }
  return report;
}

LyapunovDatko lyapunov_to_datko(const LyapunovTable& table, const EquationReport& equation, double m,
                                double log_tol) {
  if (!equation.pass) throw PreconditionError("Lyapunov table failed its equation check");
  if (!(m > 0.0) || !std::isfinite(m)) throw InputError("bound constant m must be positive");
  LyapunovDatko out;
  out.k = m;
  out.times = table.knots;
  for (std::size_t i = 0; i < table.knots.size(); ++i) {
    const double lr = table.log_abs[i] - 2.0 * table.orbit_log[i];
    out.log_ratio.push_back(lr);
    out.log_k_measured = std::max(out.log_k_measured, lr);
  }
  const double log_m = std::log(m);
  out.bounded = out.log_k_measured <= log_m + log_tol * std::max(1.0, std::abs(log_m)) + std::log1p(table.quad_error);
  return out;
}

}  // namespace evostab
