#include "evostab/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "evostab/csv.hpp"
#include "evostab/errors.hpp"

namespace evostab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2 = std::log(2.0);
const double kLog4 = std::log(4.0);
const double kLogRounding = std::log(8.0 * std::numeric_limits<double>::epsilon());

struct PanelSum {
  double log_value = kNegInf;
  double log_error = kNegInf;
};

void require_finite_log(double v) {
  if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
    throw AccuracyError("non-finite integrand value", std::numeric_limits<double>::infinity());
  }
}

class PanelIntegrator {
 public:
  PanelIntegrator(OrbitSampler& sampler, double p, const QuadratureOptions& options)
      : sampler_(sampler), p_(p), options_(options), log_refine_tol_(std::log(options.refine_tol)) {}

  // f holds p * ln||U|| at a, a+h/4, a+h/2, a+3h/4, b.
  PanelSum integrate(double a, double b, const std::array<double, 5>& f, int depth,
                     double cum_before) {
    const double h = b - a;
    const std::array<double, 3> coarse = {f[0], kLog4 + f[2], f[4]};
    const std::array<double, 5> fine = {f[0], kLog4 + f[1], kLog2 + f[2], kLog4 + f[3], f[4]};
    const double s1 = std::log(h / 6.0) + log_sum_exp(coarse);
    const double s2 = std::log(h / 12.0) + log_sum_exp(fine);
    PanelSum out;
    out.log_value = s2;
    if (s2 == kNegInf) return out;
    const double rel = std::abs(std::expm1(s1 - s2));
    out.log_error = log_add(rel == 0.0 ? kNegInf : s2 + std::log(rel), s2 + kLogRounding);

    if (depth < options_.max_refine_depth &&
        out.log_error > log_refine_tol_ + log_add(cum_before, s2)) {
      const double m = 0.5 * (a + b);
      const auto left_pts = sample(std::array<double, 2>{a + h / 8.0, a + 3.0 * h / 8.0});
      const PanelSum left =
          integrate(a, m, {f[0], left_pts[0], f[1], left_pts[1], f[2]}, depth + 1, cum_before);
      const auto right_pts = sample(std::array<double, 2>{m + h / 8.0, m + 3.0 * h / 8.0});
      const PanelSum right = integrate(m, b, {f[2], right_pts[0], f[3], right_pts[1], f[4]},
                                       depth + 1, log_add(cum_before, left.log_value));
      return {log_add(left.log_value, right.log_value), log_add(left.log_error, right.log_error)};
    }
    return out;
  }

  template <std::size_t N>
  std::array<double, N> sample(const std::array<double, N>& times) {
    const auto logs = sampler_.log_norms(times);
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
      require_finite_log(logs[i]);
      out[i] = p_ * logs[i];
      if (logs[i] == kNegInf) out[i] = kNegInf;
    }
    return out;
  }

 private:
  OrbitSampler& sampler_;
  double p_;
  const QuadratureOptions& options_;
  double log_refine_tol_;
};

CumulativeTable integrate_table(const EvolutionOperator& op, double t0, const Vector& x0, double p,
                                std::span<const double> grid, const QuadratureOptions& options) {
  if (!(p >= 1.0)) throw InputError("exponent p must be >= 1");
  if (grid.empty()) throw InputError("quadrature grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("quadrature grid must be ascending");
  if (grid.front() < t0) throw OrderingError("quadrature grid starts before t0");
  if (options.max_refine_depth > 0 && !(options.refine_tol > 0.0)) {
    throw InputError("refine tolerance must be positive");
  }

  CumulativeTable table;
  table.p = p;
  table.t0 = t0;
  table.knots.assign(grid.begin(), grid.end());
  table.cumlog.assign(grid.size(), kNegInf);
  table.orbit_log.assign(grid.size(), kNegInf);

  OrbitSampler sampler(op, t0, x0);
  sampler.advance(grid.front());
  PanelIntegrator integrator(sampler, p, options);

  const double start[] = {grid.front()};
  table.orbit_log[0] = sampler.log_norms(start).front();
  require_finite_log(table.orbit_log[0]);

  double cum = kNegInf;
  double cum_err = kNegInf;
  double worst = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double a = grid[k - 1];
    const double b = grid[k];
    if (b > a) {
      const double h = b - a;
      const auto pts = integrator.sample(std::array<double, 4>{a + h / 4.0, a + h / 2.0,
                                                                a + 3.0 * h / 4.0, b});
      const double fa = table.orbit_log[k - 1] == kNegInf ? kNegInf : p * table.orbit_log[k - 1];
      const PanelSum panel = integrator.integrate(a, b, {fa, pts[0], pts[1], pts[2], pts[3]}, 0, cum);
      cum = log_add(cum, panel.log_value);
      cum_err = log_add(cum_err, panel.log_error);
      table.orbit_log[k] = pts[3] == kNegInf ? kNegInf : pts[3] / p;
      sampler.advance(b);
    } else {
      table.orbit_log[k] = table.orbit_log[k - 1];
    }
    table.cumlog[k] = cum;
    if (cum != kNegInf) worst = std::max(worst, std::exp(cum_err - cum));
  }
  table.quad_error = worst;
  if (worst > options.error_ceiling) {
    std::ostringstream msg;
    msg << "quadrature error estimate " << worst << " exceeds ceiling " << options.error_ceiling;
    throw AccuracyError(msg.str(), worst);
  }
  return table;
}

}  // namespace

CumulativeTable log_integral_power(const EvolutionOperator& op, double t0, const Vector& x0,
                                   double p, std::span<const double> grid,
                                   const QuadratureOptions& options) {
  if (!grid.empty() && grid.front() != t0) throw InputError("quadrature grid must start at t0");
  return integrate_table(op, t0, x0, p, grid, options);
}

CumulativeTable log_integral_power_from(const EvolutionOperator& op, double t0, const Vector& x0,
                                        double p, std::span<const double> grid,
                                        const QuadratureOptions& options) {
  return integrate_table(op, t0, x0, p, grid, options);
}

std::vector<double> make_grid(double start, double stop, double panel_width,
                              std::span<const double> breakpoints) {
  if (!(stop >= start)) throw InputError("grid end precedes grid start");
  if (!(panel_width > 0.0)) throw InputError("panel width must be positive");
  std::vector<double> grid;
  const double span = stop - start;
  const auto panels = static_cast<std::size_t>(std::ceil(span / panel_width - 1e-9));
  grid.reserve(panels + 1 + breakpoints.size());
  grid.push_back(start);
  for (std::size_t i = 1; i < panels; ++i) {
    grid.push_back(start + span * static_cast<double>(i) / static_cast<double>(panels));
  }
  if (stop > start) grid.push_back(stop);
  for (double b : breakpoints) {
    if (b > start && b < stop) grid.push_back(b);
  }
  std::sort(grid.begin(), grid.end());
  const double merge = 1e-12 * std::max(1.0, std::abs(stop));
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (out.empty() || t - out.back() > merge) {
      out.push_back(t);
    } else if (t == stop || std::find(breakpoints.begin(), breakpoints.end(), t) != breakpoints.end()) {
      // Keep exact endpoints and breakpoints over nearby uniform points.
      out.back() = t;
    }
  }
  out.front() = start;
  return out;
}

std::vector<double> knot_aware_grid(const EvolutionOperator& op, double start, double stop,
                                    double panel_width) {
  const auto knots = op.breakpoints(start, stop);
  return make_grid(start, stop, panel_width, knots);
}

LineFit fit_log_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw InputError("line fit needs at least two points");
  double mean_t = 0.0;
  double mean_y = 0.0;
  for (const auto& [t, y] : points) {
    if (!std::isfinite(t) || !std::isfinite(y)) throw InputError("line fit needs finite points");
    mean_t += t;
    mean_y += y;
  }
  const auto n = static_cast<double>(points.size());
  mean_t /= n;
  mean_y /= n;
  double stt = 0.0;
  double sty = 0.0;
  for (const auto& [t, y] : points) {
    stt += (t - mean_t) * (t - mean_t);
    sty += (t - mean_t) * (y - mean_y);
  }
  if (stt == 0.0) throw InputError("line fit needs at least two distinct times");
  LineFit fit;
  fit.slope = sty / stt;
  fit.intercept = mean_y - fit.slope * mean_t;
  for (const auto& [t, y] : points) {
    fit.residual = std::max(fit.residual, std::abs(y - (fit.intercept + fit.slope * t)));
  }
  return fit;
}

void write_cumulative_csv(std::ostream& out, const CumulativeTable& table) {
  write_series_csv(out, "t,cum_log_integral", table.knots, table.cumlog);
}

}  // namespace evostab
