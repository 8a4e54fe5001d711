#include "evostab/datko.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "evostab/csv.hpp"
#include "evostab/errors.hpp"
#include "evostab/parallel.hpp"
#include "evostab/scan_grid.hpp"

namespace evostab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("exponent p must be >= 1");
}

// Index of `t` in an ascending grid, allowing for merge rounding.
std::size_t locate(std::span<const double> grid, double t) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  std::size_t best = grid.size();
  double gap = kInf;
  for (auto cand : {it, it == grid.begin() ? it : it - 1}) {
    if (cand == grid.end()) continue;
    const double d = std::abs(*cand - t);
    if (d < gap) {
      gap = d;
      best = static_cast<std::size_t>(cand - grid.begin());
    }
  }
  if (best == grid.size() || gap > tol) throw InputError("time is not on the integration grid");
  return best;
}

}  // namespace

std::vector<double> horizon_times(double t0, double horizon, double step) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be finite and >= 0");
  if (horizon == 0.0) return {t0};
  return uniform_points(t0, step, t0 + horizon);
}

RatioScan datko_ratio_scan(const EvolutionOperator& op, const Vector& x0, double t0, double p,
                           std::span<const double> times, const QuadratureOptions& quad) {
  require_p(p);
  if (times.empty() || times.front() != t0) throw InputError("ratio times must start at t0");
  if (x0.norm() == 0.0) throw InputError("Datko scan needs a nonzero probe");
  if (!std::is_sorted(times.begin(), times.end())) throw InputError("ratio times must ascend");

  std::vector<double> marks = op.breakpoints(t0, times.back());
  marks.insert(marks.end(), times.begin(), times.end());
  const auto grid = make_grid(t0, times.back(), kDefaultPanelWidth, marks);
  const CumulativeTable table = log_integral_power(op, t0, x0, p, grid, quad);

  RatioScan scan;
  scan.t0 = t0;
  scan.p = p;
  scan.quad_error = table.quad_error;
  scan.times.assign(times.begin(), times.end());
  scan.log_ratio.reserve(times.size());
  scan.t_at_max = t0;
  for (double t : times) {
    const std::size_t i = locate(table.knots, t);
    const double lr = table.cumlog[i] - p * table.orbit_log[i];
    scan.log_ratio.push_back(lr);
    if (lr > scan.log_k_measured) {
      scan.log_k_measured = lr;
      scan.t_at_max = t;
    }
  }
  return scan;
}

void write_ratio_csv(std::ostream& out, const RatioScan& scan) {
  write_series_csv(out, "t,log_ratio", scan.times, scan.log_ratio);
}

std::string to_string(DatkoVerdict v) {
  switch (v) {
    case DatkoVerdict::bounded: return "bounded";
    case DatkoVerdict::unbounded_trend: return "unbounded-trend";
    case DatkoVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

DatkoReport datko_verdict(const EvolutionOperator& op, std::span<const Vector> probes,
                          const DatkoOptions& options) {
  require_p(options.p);
  if (probes.empty()) throw InputError("Datko verdict needs at least one probe");
  if (!(options.k_ceiling > 0.0)) throw InputError("Datko ceiling must be positive");
  if (!(options.step > 0.0)) throw InputError("Datko step must be positive");
  if (!options.t0_hints.empty() && options.t0_hints.size() != probes.size()) {
    throw InputError("Datko start-time hints must match the probes");
  }
  for (const auto& x : probes) {
    if (static_cast<std::size_t>(x.size()) != op.dimension()) throw InputError("probe dimension mismatch");
  }

  DatkoReport report;
  report.p = options.p;
  report.k_ceiling = options.k_ceiling;
  report.horizon = options.horizon;
  report.step = options.step;
  report.t0_search = options.t0_search.empty() ? ScanGrid::defaults().t0s : options.t0_search;
  report.degenerate_horizon = options.horizon == 0.0;
  const double log_ceiling = std::log(options.k_ceiling);
  const double slack = std::max(log_accuracy(op), 1e-12 * std::max(1.0, std::abs(log_ceiling)));

  report.per_probe = parallel_map(probes.size(), [&](std::size_t k) {
    DatkoProbe best;
    best.probe = k;
    if (probes[k].norm() == 0.0) {
      best.excluded = true;
      return best;
    }
    std::vector<double> starts = report.t0_search;
    if (!options.t0_hints.empty()) starts.insert(starts.begin(), options.t0_hints[k]);
    bool first = true;
    for (double t0 : starts) {
      const auto times = horizon_times(t0, options.horizon, options.step);
      const RatioScan scan = datko_ratio_scan(op, probes[k], t0, options.p, times, options.quad);
      const bool better = first || scan.log_k_measured < best.log_k ||
                          (scan.log_k_measured == best.log_k && t0 < best.t0);
      first = false;
      if (!better) continue;
      best.t0 = t0;
      best.log_k = scan.log_k_measured;
      best.t_at_max = scan.t_at_max;
      best.log_ratio_end = scan.log_ratio.back();
      const double mark = t0 + 0.75 * options.horizon;
      const auto it = std::lower_bound(scan.times.begin(), scan.times.end(), mark - 1e-12);
      best.log_ratio_three_quarter = scan.log_ratio[static_cast<std::size_t>(it - scan.times.begin())];
      best.quad_error = scan.quad_error;
      best.degenerate = times.size() == 1;
    }
    best.bounded = best.log_k <= log_ceiling + slack + std::log1p(best.quad_error);
    best.trend = !best.bounded && best.log_ratio_end > log_ceiling &&
                 best.log_ratio_end > std::log(1.5) + best.log_ratio_three_quarter;
    return best;
  });

  bool all_bounded = true;
  bool any_trend = false;
  bool any = false;
  for (const auto& r : report.per_probe) {
    report.t0_of.push_back(r.t0);
    if (r.excluded) continue;
    any = true;
    all_bounded = all_bounded && r.bounded;
    any_trend = any_trend || r.trend;
    report.quad_error = std::max(report.quad_error, r.quad_error);
    if (!report.worst_probe || r.log_k > report.log_k_measured) {
      report.log_k_measured = r.log_k;
      report.worst_probe = r.probe;
    }
  }
  if (!any) throw InputError("Datko verdict needs a nonzero probe");
  report.verdict = all_bounded ? DatkoVerdict::bounded
                   : any_trend ? DatkoVerdict::unbounded_trend
                               : DatkoVerdict::inconclusive;
  return report;
}

double necessity_constant(double n, double nu, double p) {
  require_p(p);
  if (!(n >= 1.0) || !(nu > 0.0)) throw InputError("necessity constant needs N >= 1, nu > 0");
  return std::pow(n, p) / (nu * p);
}

double SufficiencyConstants::growth(double tau) const {
  if (tau < 0.0) throw InputError("growth function evaluated at negative time");
  return std::pow(l, 1.0 / p) * (1.0 + std::pow(tau, 1.0 / p)) / (1.0 + std::pow(k, 1.0 / p));
}

GrowthFunction SufficiencyConstants::growth_function(std::vector<double> knots) const {
  return GrowthFunction::sample([this](double tau) { return growth(tau); }, std::move(knots));
}

SufficiencyConstants sufficiency_constants(double k, double p, double m, double omega) {
  require_p(p);
  if (!(k > 0.0) || !std::isfinite(k)) throw InputError("sufficiency constants need K > 0");
  if (!(m >= 1.0)) throw InputError("sufficiency constants need M >= 1");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw InputError("sufficiency constants need omega > 0");
  const double wp = omega * p;
  const double mp = std::pow(m, p);
  // -expm1(-x)/x stays accurate for small omega.
  const double first = (1.0 / (mp * k)) * (-std::expm1(-wp) / wp);
  const double second = std::exp(-wp) / mp;
  return SufficiencyConstants{std::min(first, second), k, p, m, omega};
}

double discrete_sum_scan(const EvolutionOperator& op, const Vector& x0, double t0, double p, double t) {
  require_p(p);
  if (!(t >= t0)) throw OrderingError("discrete sum needs t >= t0");
  const auto count = static_cast<std::size_t>(std::floor(t - t0)) + 1;
  std::vector<double> times(count);
  for (std::size_t n = 0; n < count; ++n) times[count - 1 - n] = t - static_cast<double>(n);
  auto logs = orbit_log_norms(op, t0, x0, times);
  for (double& l : logs) l *= p;
  return log_sum_exp(logs);
}

std::vector<double> discrete_log_ratios(const EvolutionOperator& op, const Vector& x0, double t0,
                                        double p, std::span<const double> times) {
  const auto norms = orbit_log_norms(op, t0, x0, times);
  return parallel_map(times.size(), [&](std::size_t i) {
    return discrete_sum_scan(op, x0, t0, p, times[i]) - p * norms[i];
  });
}

double discrete_necessity_constant(double n, double nu, double p) {
  require_p(p);
  if (!(n >= 1.0) || !(nu > 0.0)) throw InputError("necessity constant needs N >= 1, nu > 0");
  return std::pow(n, p) / -std::expm1(-nu * p);
}

double discrete_to_integral_bound(double k_discrete, double m, double omega, double p) {
  return std::exp(log_discrete_to_integral_bound(std::log(k_discrete), std::log(m), omega, p));
}

double log_discrete_to_integral_bound(double log_k_discrete, double log_m, double omega, double p) {
  require_p(p);
  if (std::isnan(log_k_discrete) || log_k_discrete == kInf) throw InputError("discrete constant must be finite");
  if (!(log_m >= 0.0)) throw InputError("decay constant M must be >= 1");
  if (!(omega > 0.0)) throw InputError("decay rate omega must be > 0");
  return log_k_discrete + p * log_m + omega * p;
}

}  // namespace evostab
