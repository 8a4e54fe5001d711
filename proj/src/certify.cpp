#include "evostab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <tuple>

#include <boost/math/tools/minima.hpp>

#include "evostab/errors.hpp"
#include "evostab/parallel.hpp"

namespace evostab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSpanSlack = 1e-9;

bool is_zero(const Vector& x) { return x.norm() == 0.0; }

auto witness_key(const Witness& w) { return std::make_tuple(w.t0, w.s, w.t, w.probe); }

void record(CheckResult& result, const Witness& w, double lhs, double rhs, double log_tol,
            double slack) {
  ++result.points;
  const double tol = std::max(slack, log_tol * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
  if (w.log_violation > tol || std::isnan(w.log_violation)) result.pass = false;
  if (!result.worst || w.log_violation > result.worst->log_violation ||
      (w.log_violation == result.worst->log_violation && witness_key(w) < witness_key(*result.worst))) {
    result.worst = w;
    result.max_violation = w.log_violation;
  }
}

CheckResult merge(std::vector<CheckResult> parts) {
  CheckResult out;
  for (auto& part : parts) {
    out.pass = out.pass && part.pass;
    out.points += part.points;
    if (!part.worst) continue;
    const Witness& w = *part.worst;
    if (!out.worst || w.log_violation > out.worst->log_violation ||
        (w.log_violation == out.worst->log_violation && witness_key(w) < witness_key(*out.worst))) {
      out.worst = w;
      out.max_violation = w.log_violation;
    }
  }
  return out;
}

struct Orbit {
  std::vector<double> times;
  std::vector<double> logs;
};

Orbit sample_orbit(const EvolutionOperator& op, const ScanGrid& grid, double t0, const Vector& x) {
  Orbit orbit;
  orbit.times = grid.sample_times(op, t0);
  orbit.logs = orbit_log_norms(op, t0, x, orbit.times);
  return orbit;
}

// Visits every (s, t) index pair of the three-time scan.
template <class Visit>
void for_each_pair(const ScanGrid& grid, double t0, const Orbit& orbit, Visit&& visit) {
  const auto& ts = orbit.times;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] - t0 > grid.s_span + kSpanSlack) break;
    for (std::size_t j = i; j < ts.size(); ++j) {
      if (ts[j] - ts[i] > grid.d_span + kSpanSlack) break;
      visit(i, j);
    }
  }
}

void require_probes(const EvolutionOperator& op, std::span<const Vector> probes) {
  if (probes.empty()) throw InputError("at least one probe is required");
  for (const auto& x : probes) {
    if (static_cast<std::size_t>(x.size()) != op.dimension()) {
      throw InputError("probe dimension does not match the operator");
    }
  }
}

// Runs a per-(probe, t0) three-time scan with the given log-form sides.
template <class Sides>
CheckResult scan_three_time(const EvolutionOperator& op, std::span<const Vector> probes,
                            const ScanGrid& grid, double log_tol,
                            const std::function<std::vector<double>(std::size_t)>& t0s_for,
                            Sides&& sides) {
  const double slack = log_accuracy(op);
  auto parts = parallel_map(probes.size(), [&](std::size_t k) {
    CheckResult part;
    if (is_zero(probes[k])) return part;
    for (double t0 : t0s_for(k)) {
      const Orbit orbit = sample_orbit(op, grid, t0, probes[k]);
      for_each_pair(grid, t0, orbit, [&](std::size_t i, std::size_t j) {
        const double s = orbit.times[i];
        const double t = orbit.times[j];
        const auto [lhs, rhs] = sides(t - s, orbit.logs[i], orbit.logs[j]);
        record(part, Witness{t0, s, t, k, rhs - lhs}, lhs, rhs, log_tol, slack);
      });
    }
    return part;
  });
  return merge(std::move(parts));
}

// Two-time scan over (t0, t); sides(t0, t, log||x0||, log||U(t,t0)x0||).
template <class Sides>
CheckResult scan_two_time(const EvolutionOperator& op, std::span<const Vector> probes,
                          const ScanGrid& grid, double log_tol, Sides&& sides) {
  const double slack = log_accuracy(op);
  auto parts = parallel_map(probes.size(), [&](std::size_t k) {
    CheckResult part;
    if (is_zero(probes[k])) return part;
    for (double t0 : grid.t0s) {
      const Orbit orbit = sample_orbit(op, grid, t0, probes[k]);
      for (std::size_t j = 0; j < orbit.times.size(); ++j) {
        const double t = orbit.times[j];
        const auto [lhs, rhs] = sides(t0, t, orbit.logs[0], orbit.logs[j]);
        record(part, Witness{t0, t0, t, k, rhs - lhs}, lhs, rhs, log_tol, slack);
      }
    }
    return part;
  });
  return merge(std::move(parts));
}

}  // namespace

double DecayCertificate::m() const { return std::exp(log_m); }

// ---- GrowthFunction -------------------------------------------------------------

GrowthFunction GrowthFunction::sample(const std::function<double(double)>& f,
                                      std::vector<double> knots, double divergence_bound) {
  GrowthFunction g;
  g.values.reserve(knots.size());
  for (double t : knots) g.values.push_back(f(t));
  g.knots = std::move(knots);
  g.divergence_bound = divergence_bound;
  g.validate();
  return g;
}

void GrowthFunction::validate() const {
  if (knots.empty() || knots.size() != values.size()) {
    throw InputError("growth function needs matching, non-empty knots and values");
  }
  if (knots.front() != 0.0) throw InputError("growth function knots must start at 0");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw InputError("growth function samples must be positive and finite");
    }
    if (i > 0 && !(knots[i] > knots[i - 1])) throw InputError("growth function knots must ascend");
    if (i > 0 && values[i] < values[i - 1]) throw InputError("growth function must be nondecreasing");
  }
}

double GrowthFunction::value_at(double tau) const {
  if (tau < 0.0) throw InputError("growth function evaluated at negative time");
  const double probe = tau + 1e-12 * std::max(1.0, tau);
  const auto it = std::upper_bound(knots.begin(), knots.end(), probe);
  return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

// ---- decay ----------------------------------------------------------------------

DecayFit fit_decay(const EvolutionOperator& op, std::span<const Vector> probes,
                   const ScanGrid& grid, const DecayFitOptions& options) {
  require_probes(op, probes);
  grid.validate();

  struct Sample {
    double t0, t, drop;  // drop = -ln(||U||/||x0||)
    std::size_t probe;
  };
  auto per_probe = parallel_map(probes.size(), [&](std::size_t k) {
    std::vector<Sample> out;
    if (is_zero(probes[k])) return out;
    for (double t0 : grid.t0s) {
      const Orbit orbit = sample_orbit(op, grid, t0, probes[k]);
      for (std::size_t j = 1; j < orbit.times.size(); ++j) {
        out.push_back({t0, orbit.times[j], orbit.logs[0] - orbit.logs[j], k});
      }
    }
    return out;
  });

  DecayFit fit;
  fit.required_rate = -kInf;
  for (const auto& samples : per_probe) {
    for (const auto& s : samples) fit.required_rate = std::max(fit.required_rate, s.drop / (s.t - s.t0));
  }
  if (fit.required_rate == -kInf) fit.required_rate = 0.0;

  if (fit.required_rate <= options.omega_max) {
    fit.certificate = DecayCertificate{0.0, std::max(fit.required_rate, options.min_rate)};
    return fit;
  }
  // Rate cap reached: the constant has to absorb the rest.
  const double omega = options.omega_max;
  double log_m = 0.0;
  Witness worst;
  for (const auto& samples : per_probe) {
    for (const auto& s : samples) {
      const double need = s.drop - omega * (s.t - s.t0);
      const Witness w{s.t0, s.t0, s.t, s.probe, need - options.log_m_max};
      if (need > log_m) log_m = need;
      if (w.log_violation > worst.log_violation ||
          (w.log_violation == worst.log_violation && witness_key(w) < witness_key(worst))) {
        worst = w;
      }
    }
  }
  if (log_m <= options.log_m_max) {
    fit.certificate = DecayCertificate{log_m, omega};
  } else {
    fit.refutation = worst;
  }
  return fit;
}

CheckResult check_decay(const EvolutionOperator& op, const DecayCertificate& cert,
                        std::span<const Vector> probes, const ScanGrid& grid, double log_tol) {
  if (!(cert.log_m >= 0.0) || !(cert.omega > 0.0)) throw InputError("decay certificate needs M >= 1, omega > 0");
  require_probes(op, probes);
  grid.validate();
  return scan_two_time(op, probes, grid, log_tol, [&](double t0, double t, double l0, double lt) {
    return std::make_pair(cert.log_m + lt, -cert.omega * (t - t0) + l0);
  });
}

// ---- uniform / nonuniform / BV ----------------------------------------------------

CheckResult check_uniform(const EvolutionOperator& op, const UniformCertificate& cert,
                          std::span<const Vector> probes, const ScanGrid& grid, double log_tol) {
  if (!(cert.n >= 1.0) || !(cert.nu > 0.0)) throw InputError("uniform certificate needs N >= 1, nu > 0");
  require_probes(op, probes);
  grid.validate();
  const double log_n = std::log(cert.n);
  return scan_three_time(op, probes, grid, log_tol,
                         [&](std::size_t) { return grid.t0s; },
                         [&](double dt, double ls, double lt) {
                           return std::make_pair(log_n + lt, cert.nu * dt + ls);
                         });
}

CheckResult check_nonuniform(const EvolutionOperator& op, const NonuniformCertificate& cert,
                             std::span<const Vector> probes, const ScanGrid& grid, double log_tol) {
  if (!cert.log_n || !(cert.nu > 0.0)) throw InputError("nonuniform certificate needs N(.) and nu > 0");
  require_probes(op, probes);
  grid.validate();
  return scan_two_time(op, probes, grid, log_tol, [&](double t0, double t, double l0, double lt) {
    const double log_n = cert.log_n(t);
    if (!(log_n >= 0.0)) throw InputError("nonuniform certificate has N(t) < 1");
    return std::make_pair(log_n + lt, cert.nu * (t - t0) + l0);
  });
}

std::optional<BvWitness> refute_bv(const EvolutionOperator& op, const BVCertificate& candidate,
                                   int bound, std::span<const Vector> probes, const ScanGrid& grid,
                                   double log_tol) {
  if (!(candidate.n >= 1.0) || !(candidate.alpha >= 0.0) || !(candidate.nu > 0.0)) {
    throw InputError("BV candidate needs N >= 1, alpha >= 0, nu > 0");
  }
  if (bound < 2) throw InputError("witness search bound must be >= 2");
  std::vector<Vector> basis;
  if (probes.empty()) {
    for (std::size_t i = 0; i < op.dimension(); ++i) basis.push_back(Vector::Unit(static_cast<Eigen::Index>(op.dimension()), static_cast<Eigen::Index>(i)));
    probes = basis;
  }
  require_probes(op, probes);
  const double log_n = std::log(candidate.n);

  auto violation = [&](double t, double t0, double l0, double lt) -> std::optional<double> {
    const double lhs = log_n + candidate.alpha * t + lt;
    const double rhs = candidate.nu * (t - t0) + l0;
    const double tol = std::max(log_accuracy(op), log_tol * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
    if (rhs - lhs > tol) return rhs - lhs;
    return std::nullopt;
  };

  for (int n = 2; n <= bound; ++n) {
    const double t0 = n;
    const double t = n + 1.0 / n;
    for (std::size_t k = 0; k < probes.size(); ++k) {
      if (is_zero(probes[k])) continue;
      const double l0 = std::log(probes[k].norm());
      const double lt = orbit_log_norm(op, t, t0, probes[k]).log_value();
      if (auto d = violation(t, t0, l0, lt)) return BvWitness{t, t0, n, k, *d};
    }
  }
  grid.validate();
  for (double t0 : grid.t0s) {
    for (std::size_t k = 0; k < probes.size(); ++k) {
      if (is_zero(probes[k])) continue;
      const Orbit orbit = sample_orbit(op, grid, t0, probes[k]);
      for (std::size_t j = 1; j < orbit.times.size(); ++j) {
        if (auto d = violation(orbit.times[j], t0, orbit.logs[0], orbit.logs[j])) {
          return BvWitness{orbit.times[j], t0, 0, k, *d};
        }
      }
    }
  }
  return std::nullopt;
}

// ---- weak instability ---------------------------------------------------------------

namespace {

// Tightest (N, nu) at a fixed start time: nu is the smallest pair slope, which
// makes N = 1. When that slope is below nu_min, fall back to the largest nu
// admissible with N <= n_max.
struct StartScore {
  WeakProbeResult result;
  double tight_nu = 0.0;
  bool tight = false;
};

StartScore score_start(const EvolutionOperator& op, const ScanGrid& grid, double t0,
                       const Vector& x, const WeakSearchOptions& options) {
  const Orbit orbit = sample_orbit(op, grid, t0, x);
  const double log_n_max = std::log(options.n_max);
  double tight = kInf;
  double relaxed = kInf;
  for_each_pair(grid, t0, orbit, [&](std::size_t i, std::size_t j) {
    const double dt = orbit.times[j] - orbit.times[i];
    if (dt <= 0.0) return;
    const double r = orbit.logs[j] - orbit.logs[i];
    tight = std::min(tight, r / dt);
    relaxed = std::min(relaxed, (r + log_n_max) / dt);
  });
  StartScore score;
  score.result.t0 = t0;
  if (tight == kInf) {
    // No pair with t > s: nothing constrains nu.
    score.result = {t0, 1.0, 0.0, false, false};
    return score;
  }
  score.tight_nu = tight;
  if (tight >= options.nu_min) {
    score.tight = true;
    score.result = {t0, 1.0, tight, true, false};
    return score;
  }
  double log_n = 0.0;
  for_each_pair(grid, t0, orbit, [&](std::size_t i, std::size_t j) {
    const double dt = orbit.times[j] - orbit.times[i];
    log_n = std::max(log_n, relaxed * dt - (orbit.logs[j] - orbit.logs[i]));
  });
  log_n = std::min(log_n, log_n_max);
  score.result = {t0, std::exp(log_n), relaxed, relaxed >= options.nu_min, false};
  return score;
}

// Feasible first, then smaller N, then larger nu, then earlier start.
bool better(const WeakProbeResult& a, const WeakProbeResult& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.n != b.n) return a.n < b.n;
  if (a.nu != b.nu) return a.nu > b.nu;
  return a.t0 < b.t0;
}

double t0_spacing(const std::vector<double>& t0s) {
  double h = kInf;
  for (std::size_t i = 1; i < t0s.size(); ++i) {
    if (t0s[i] > t0s[i - 1]) h = std::min(h, t0s[i] - t0s[i - 1]);
  }
  return h == kInf ? 0.25 : h;
}

}  // namespace

WeakResult certify_weak(const EvolutionOperator& op, std::span<const Vector> probes,
                        const ScanGrid& grid, const WeakSearchOptions& options) {
  require_probes(op, probes);
  grid.validate();
  if (!(options.n_max >= 1.0) || !(options.nu_min > 0.0)) {
    throw InputError("weak search needs N_max >= 1 and nu_min > 0");
  }
  const double spacing = t0_spacing(grid.t0s);

  WeakResult result;
  result.per_probe = parallel_map(probes.size(), [&](std::size_t k) {
    WeakProbeResult best;
    if (is_zero(probes[k])) {
      best.excluded = true;
      return best;
    }
    StartScore best_score;
    bool first = true;
    for (double t0 : grid.t0s) {
      StartScore score = score_start(op, grid, t0, probes[k], options);
      if (first || better(score.result, best_score.result)) best_score = score;
      first = false;
    }
    best = best_score.result;
    if (options.refine_t0 && best_score.tight) {
      const double lo = std::max(0.0, best.t0 - spacing);
      const double hi = best.t0 + spacing;
      auto objective = [&](double t0) { return -score_start(op, grid, t0, probes[k], options).tight_nu; };
      std::uintmax_t iterations = 200;
      const auto [t0, value] = boost::math::tools::brent_find_minima(
          objective, lo, hi, std::numeric_limits<double>::digits / 2, iterations);
      (void)value;
      const StartScore refined = score_start(op, grid, t0, probes[k], options);
      if (better(refined.result, best)) best = refined.result;
    }
    return best;
  });

  WeakCertificate cert;
  cert.n = 1.0;
  cert.nu = kInf;
  bool feasible = true;
  bool any = false;
  for (const auto& r : result.per_probe) {
    cert.t0_of.push_back(r.t0);
    if (r.excluded) continue;
    any = true;
    feasible = feasible && r.feasible;
    cert.n = std::max(cert.n, r.n);
    cert.nu = std::min(cert.nu, r.nu);
  }
  if (any && feasible && cert.n <= options.n_max && cert.nu >= options.nu_min) {
    result.certificate = std::move(cert);
  }
  return result;
}

CheckResult check_weak(const EvolutionOperator& op, const WeakCertificate& cert,
                       std::span<const Vector> probes, const ScanGrid& grid, double log_tol) {
  if (!(cert.n >= 1.0) || !(cert.nu > 0.0)) throw InputError("weak certificate needs N >= 1, nu > 0");
  require_probes(op, probes);
  if (cert.t0_of.size() != probes.size()) throw InputError("weak certificate has no start time per probe");
  const double log_n = std::log(cert.n);
  return scan_three_time(op, probes, grid, log_tol,
                         [&](std::size_t k) { return std::vector<double>{cert.t0_of[k]}; },
                         [&](double dt, double ls, double lt) {
                           return std::make_pair(log_n + lt, cert.nu * dt + ls);
                         });
}

CheckResult check_growth(const EvolutionOperator& op, const GrowthFunction& f,
                         std::span<const double> t0_of, std::span<const Vector> probes,
                         const ScanGrid& grid, double log_tol) {
  f.validate();
  require_probes(op, probes);
  if (t0_of.size() != probes.size()) throw InputError("growth check needs one start time per probe");
  return scan_three_time(op, probes, grid, log_tol,
                         [&](std::size_t k) { return std::vector<double>{t0_of[k]}; },
                         [&](double dt, double ls, double lt) {
                           return std::make_pair(lt, std::log(f.value_at(dt)) + ls);
                         });
}

// ---- conversions ------------------------------------------------------------------------

GrowthExponential growth_to_exponential(const GrowthFunction& f, std::span<const double> c_search) {
  f.validate();
  std::vector<double> defaults;
  if (c_search.empty()) {
    for (double t : f.knots) {
      if (t > 0.0) defaults.push_back(t);
    }
    c_search = defaults;
  }
  const double f0 = f.value_at(0.0);
  for (double c : c_search) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("growth search times must be positive");
    if (c > f.divergence_bound) break;
    const double fc = f.value_at(c);
    if (fc > 1.0) return GrowthExponential{fc / f0, std::log(fc) / c, c};
  }
  throw DivergenceNotObserved("growth function never exceeds 1 on the searched range");
}

GrowthFunction exponential_to_growth(double n, double nu, std::vector<double> knots) {
  if (!(n >= 1.0) || !(nu > 0.0)) throw InputError("exponential parameters need N >= 1, nu > 0");
  return GrowthFunction::sample([n, nu](double t) { return std::exp(nu * t) / n; }, std::move(knots));
}

// ---- probes ----------------------------------------------------------------------------

std::vector<Vector> random_unit_probes(std::size_t dimension, std::size_t count, std::uint64_t seed) {
  if (dimension == 0) throw InputError("probe dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(count);
  while (out.size() < count) {
    Vector v(static_cast<Eigen::Index>(dimension));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    const double norm = v.norm();
    if (norm > 1e-12) out.push_back(v / norm);
  }
  return out;
}

std::vector<Vector> adversarial_probes(const EvolutionOperator& op, std::span<const double> t0s,
                                       double window) {
  std::vector<Vector> out;
  const auto d = static_cast<Eigen::Index>(op.dimension());
  if (d < 2) return out;
  for (double t0 : t0s) {
    Matrix u(d, d);
    for (Eigen::Index i = 0; i < d; ++i) u.col(i) = evaluate(op, t0 + window, t0, Vector::Unit(d, i));
    Eigen::JacobiSVD<Matrix> svd(u, Eigen::ComputeFullV);
    Vector v = svd.matrixV().col(d - 1);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (v(i) != 0.0) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    out.push_back(v.normalized());
  }
  return out;
}

}  // namespace evostab
