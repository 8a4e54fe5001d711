#include "evostab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "evostab/certify.hpp"
#include "evostab/commands.hpp"
#include "evostab/datko.hpp"
#include "evostab/errors.hpp"
#include "evostab/lyapunov.hpp"
#include "evostab/numerics.hpp"

namespace fs = std::filesystem;

namespace evostab {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kPi = std::numbers::pi;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector scalar(double v) { return Vector::Constant(1, v); }

// Distance of a to b modulo pi.
double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, kPi)); }

CriterionResult c1(const AcceptanceOptions&) {
  const auto start = Clock::now();
  const auto& op = corpus_member("planar_rotation");
  const auto probes = planar_directions(16);
  const ScanGrid grid = ScanGrid::defaults();
  const WeakResult weak = certify_weak(op, probes, grid);
  bool ok = weak.certificate.has_value();
  double n = 0.0, nu = 0.0, t0_gap = 0.0;
  if (ok) {
    n = weak.certificate->n;
    nu = weak.certificate->nu;
    ok = n == 1.0 && std::abs(nu - 1.0) <= 1e-9;
    for (std::size_t k = 0; k < probes.size(); ++k) {
      t0_gap = std::max(t0_gap, angle_gap(weak.certificate->t0_of[k], 2.0 * kPi * k / 16.0));
    }
    ok = ok && t0_gap <= 1e-6;
  }
  // With t0 at the polar angle itself the orbit is exactly e^{t-t0}.
  std::vector<double> angles;
  for (std::size_t k = 0; k < probes.size(); ++k) angles.push_back(2.0 * kPi * k / 16.0);
  const CheckResult check = check_weak(op, WeakCertificate{1.0, 1.0, angles}, probes, grid);
  double gap = 0.0;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double t0 = angles[k];
    const auto times = grid.sample_times(op, t0);
    const auto logs = orbit_log_norms(op, t0, probes[k], times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      gap = std::max(gap, std::abs(logs[i] - (times[i] - t0)));
      if (times[i] - t0 > grid.s_span) continue;
      for (std::size_t j = i; j < times.size() && times[j] - times[i] <= grid.d_span; ++j) {
        gap = std::max(gap, std::abs((logs[j] - logs[i]) - (times[j] - times[i])));
      }
    }
  }
  const double secs = seconds_since(start);
  const bool pass = ok && check.pass && gap <= 1e-9 && secs < 5.0;
  return {1, criterion_title(1), pass,
          fmt::format("N={:.6g} nu={:.12g} t0 gap mod pi={:.2e} equality gap={:.2e} check={}", n, nu,
                      t0_gap, gap, check.pass ? "pass" : "fail")};
}

CriterionResult c2(const AcceptanceOptions& opt) {
  const auto& op = corpus_member("planar_rotation");
  const ScanGrid grid = ScanGrid::defaults();
  std::vector<Vector> probes = random_unit_probes(2, 8, opt.seed);
  const auto adversarial = adversarial_probes(op, grid.t0s);
  probes.insert(probes.end(), adversarial.begin(), adversarial.end());
  bool all_refuted = true;
  std::size_t candidates = 0;
  for (int log_n = 0; log_n <= 10; log_n += 2) {
    for (double nu : {0.05, 0.5, 1.0, 2.0}) {
      ++candidates;
      if (check_uniform(op, UniformCertificate{std::exp(log_n), nu}, probes, grid).pass) all_refuted = false;
    }
  }
  const CheckResult strongest = check_uniform(op, UniformCertificate{std::exp(10.0), 0.05}, probes, grid);
  bool dir_ok = false;
  double dir_err = 1.0, slope = 0.0;
  if (strongest.worst) {
    const Witness& w = *strongest.worst;
    const Vector& x = probes[w.probe];
    Vector d(2);
    d << -std::sin(w.t0), std::cos(w.t0);
    dir_err = std::min((x - d).norm(), (x + d).norm());
    std::vector<std::pair<double, double>> pts;
    const auto times = uniform_points(w.t0, 0.5, w.t0 + 10.0);
    const auto logs = orbit_log_norms(op, w.t0, x, times);
    for (std::size_t i = 0; i < times.size(); ++i) pts.emplace_back(times[i], logs[i]);
    slope = fit_log_slope(pts).slope;
    dir_ok = dir_err <= 1e-9 && std::abs(slope + 1.0) <= 1e-9;
  }
  return {2, criterion_title(2), all_refuted && !strongest.pass && dir_ok,
          fmt::format("{} candidates refuted={} witness direction error={:.2e} decay slope={:.12g}", candidates,
                      all_refuted ? "all" : "not all", dir_err, slope)};
}

CriterionResult c3(const AcceptanceOptions&) {
  const auto& op = corpus_member("nonuniform_spikes");
  const auto& kernel = std::get<ScalarKernel>(op.impl());
  const LogProfile profile = *kernel.profile;
  const NonuniformCertificate cert{[profile](double t) { return profile(t); }, 1.0, "u(t)"};
  const std::vector<Vector> probes = {scalar(1.0), scalar(-0.5)};

  ScanGrid full = ScanGrid::defaults();
  full.s_span = 25.0;
  full.d_span = 25.0;
  full.t_max = 50.0;
  const CheckResult general = check_nonuniform(op, cert, probes, full);

  // Start times with u(t0) = 1 make both sides equal.
  ScanGrid flat = full;
  flat.t0s = {0.0, 0.5, 1.0, 1.5, 2.0};
  for (int n = 3; n <= 20; ++n) flat.t0s.push_back(n);
  const CheckResult equal = check_nonuniform(op, cert, probes, flat);

  bool finite = true;
  for (double t0 : full.t0s) {
    for (const auto& x : probes) {
      const auto times = full.sample_times(op, t0);
      for (double l : orbit_log_norms(op, t0, x, times)) finite = finite && std::isfinite(l);
      for (double t : times) finite = finite && std::isfinite(profile(t));
    }
  }
  const bool pass = general.pass && equal.pass && std::abs(equal.max_violation) <= 1e-12 && finite;
  return {3, criterion_title(3), pass,
          fmt::format("points={} max log gap={:.2e} equality gap={:.2e} finite={}", general.points,
                      general.max_violation, std::abs(equal.max_violation), finite)};
}

CriterionResult c4(const AcceptanceOptions&) {
  const auto& op = corpus_member("nonuniform_spikes");
  std::size_t tried = 0, found = 0;
  int worst_n = 0;
  for (int log_n = 0; log_n <= 5; ++log_n) {
    for (int a = 0; a <= 10; ++a) {
      for (int v = 1; v <= 30; ++v) {
        ++tried;
        const auto w = refute_bv(op, BVCertificate{std::exp(log_n), 0.5 * a, 0.1 * v}, 50);
        if (w && w->n >= 2 && w->n <= 50) {
          ++found;
          worst_n = std::max(worst_n, w->n);
        }
      }
    }
  }
  const auto inst = refute_bv(op, BVCertificate{std::numbers::e, 1.0, 1.0}, 50);
  const bool inst_ok = inst && inst->n == 2 && std::abs(inst->deficit - 0.5) <= 1e-12;
  return {4, criterion_title(4), found == tried && inst_ok,
          fmt::format("witnesses {}/{} (largest n={}), (e,1,1) -> n={} deficit={:.15g}", found, tried, worst_n,
                      inst ? inst->n : -1, inst ? inst->deficit : 0.0)};
}

CriterionResult c5(const AcceptanceOptions&) {
  const auto& op = corpus_member("uniform_growth");
  const double h = 20.0;
  const auto times = horizon_times(0.0, h, 0.25);
  const RatioScan scan = datko_ratio_scan(op, scalar(1.0), 0.0, 1.0, times);
  const double k = std::exp(scan.log_k_measured);
  const bool k_ok = k >= 1.0 - std::exp(-h) - 1e-6 && k <= 1.0;

  const auto grid = knot_aware_grid(op, 0.0, h);
  const CumulativeTable table = log_integral_power(op, 0.0, scalar(1.0), 1.0, grid);
  double rel = 0.0;
  for (std::size_t i = 1; i < table.knots.size(); ++i) {
    const double exact = std::log(std::expm1(table.knots[i]));
    rel = std::max(rel, std::abs(std::expm1(table.cumlog[i] - exact)));
  }
  return {5, criterion_title(5), k_ok && rel <= 1e-8,
          fmt::format("K_measured={:.15g} lower={:.15g} antiderivative rel err={:.2e}", k,
                      1.0 - std::exp(-h) - 1e-6, rel)};
}

CriterionResult c6(const AcceptanceOptions&) {
  const SufficiencyConstants sc = sufficiency_constants(1.0, 1.0, 1.0, 1.0);
  const bool l_ok = std::abs(sc.l - std::exp(-1.0)) <= 1e-12;
  const auto& op = corpus_member("uniform_growth");
  const double h = 20.0;
  const GrowthFunction f = sc.growth_function(uniform_points(0.0, 0.25, h));
  const GrowthExponential ge = growth_to_exponential(f);

  // The Datko scan that passes with K = 1 and the growth checks share t0 = 0.
  const std::vector<Vector> probes = {scalar(1.0), scalar(-2.0)};
  DatkoOptions d;
  d.p = 1.0;
  d.k_ceiling = 1.0;
  d.t0_search = {0.0};
  d.horizon = h;
  const DatkoReport datko = datko_verdict(op, probes, d);
  ScanGrid grid;
  grid.t0s = {0.0};
  grid.step = 0.25;
  grid.s_span = h;
  grid.d_span = h;
  grid.t_max = h;
  const std::vector<double> t0_of(probes.size(), 0.0);
  const CheckResult weak = check_weak(op, WeakCertificate{ge.n, ge.nu, t0_of}, probes, grid);
  const CheckResult growth = check_growth(op, f, t0_of, probes, grid);
  const bool pass = l_ok && datko.verdict == DatkoVerdict::bounded && weak.pass && growth.pass;
  return {6, criterion_title(6), pass,
          fmt::format("L={:.15g} c={} N={:.6g} nu={:.6g} datko={} weak={} growth={}", sc.l, ge.c, ge.n, ge.nu,
                      to_string(datko.verdict), weak.pass ? "pass" : "fail", growth.pass ? "pass" : "fail")};
}

CriterionResult c7(const AcceptanceOptions& opt) {
  const auto& growth_op = corpus_member("uniform_growth");
  const auto times = horizon_times(0.0, 20.0, 0.25);
  const auto ratios = discrete_log_ratios(growth_op, scalar(1.0), 0.0, 1.0, times);
  const double max_ratio = std::exp(*std::max_element(ratios.begin(), ratios.end()));
  const double ceiling = discrete_necessity_constant(1.0, 1.0, 1.0);
  const bool discrete_ok = max_ratio <= ceiling + 1e-9;

  const double h = 10.0;
  const std::vector<double> starts = {0.0, 1.5};
  bool chain_ok = true;
  double worst = -std::numeric_limits<double>::infinity();
  std::string worst_op;
  for (const auto& m : corpus()) {
    const auto probes = random_unit_probes(m.op.dimension(), 3, opt.seed);
    // Decay constants over every window the chain uses, caps lifted.
    ScanGrid fit;
    fit.t0s = uniform_points(0.0, 0.5, starts.back() + h);
    fit.step = 0.5;
    fit.s_span = 0.0;
    fit.d_span = h + starts.back();
    fit.t_max = starts.back() + h;
    const DecayFit decay = fit_decay(m.op, probes, fit,
                                     {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 1e-6});
    const double log_bound = log_discrete_to_integral_bound(0.0, decay.certificate->log_m, decay.certificate->omega, 1.0);
    for (const auto& x : probes) {
      for (double t0 : starts) {
        const auto grid = knot_aware_grid(m.op, t0, t0 + h);
        const CumulativeTable table = log_integral_power(m.op, t0, x, 1.0, grid);
        for (double t : horizon_times(t0, h, 0.5)) {
          const auto it = std::lower_bound(table.knots.begin(), table.knots.end(), t - 1e-12);
          const double cum = table.cumlog[static_cast<std::size_t>(it - table.knots.begin())];
          const double disc = discrete_sum_scan(m.op, x, t0, 1.0, t);
          const double excess = cum - (log_bound + disc);
          const double allowed = std::log1p(table.quad_error) + std::max(1e-12, log_accuracy(m.op));
          if (excess - allowed > worst) {
            worst = excess - allowed;
            worst_op = m.name;
          }
          if (excess > allowed) chain_ok = false;
        }
      }
    }
  }
  return {7, criterion_title(7), discrete_ok && chain_ok,
          fmt::format("max discrete ratio={:.12g} ceiling={:.12g}; chain slack worst={:.3g} ({})", max_ratio,
                      ceiling, worst, worst_op)};
}

struct VerdictProfile {
  bool decay = false;
  bool weak = false;
  bool uniform_refuted = false;
  bool datko_bounded = false;
  bool lyapunov_bound = true;
  bool lyapunov_equation = true;
  bool lyapunov_datko = true;
  double n = 0.0;
  double nu = 0.0;
};

VerdictProfile verdict_profile(const EvolutionOperator& op, std::uint64_t seed) {
  VerdictProfile v;
  const ScanGrid grid = ScanGrid::defaults();
  const auto probes = random_unit_probes(op.dimension(), 4, seed);
  const DecayFit decay = fit_decay(op, probes, grid);
  v.decay = decay.certificate && check_decay(op, *decay.certificate, probes, grid).pass;

  std::vector<Vector> checked = probes;
  const auto adversarial = adversarial_probes(op, grid.t0s);
  checked.insert(checked.end(), adversarial.begin(), adversarial.end());
  v.uniform_refuted = !check_uniform(op, UniformCertificate{std::exp(10.0), 0.05}, checked, grid).pass;

  const WeakSearchOptions caps;
  const WeakResult weak = certify_weak(op, probes, grid);
  v.weak = weak.certificate && check_weak(op, *weak.certificate, probes, grid).pass;
  v.n = v.weak ? weak.certificate->n : caps.n_max;
  v.nu = v.weak ? weak.certificate->nu : caps.nu_min;

  DatkoOptions d;
  d.p = 2.0;
  d.k_ceiling = necessity_constant(v.n, v.nu, 2.0);
  d.t0_search = grid.t0s;
  if (v.weak) d.t0_hints = weak.certificate->t0_of;
  const DatkoReport datko = datko_verdict(op, probes, d);
  v.datko_bounded = datko.verdict == DatkoVerdict::bounded;

  const double m = lyapunov_bound_constant(v.n, v.nu);
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double t0 = v.weak ? weak.certificate->t0_of[k] : datko.t0_of[k];
    const auto knots = horizon_times(t0, d.horizon, d.step);
    const LyapunovTable table = build_lyapunov(op, t0, probes[k], knots, m);
    const EquationReport eq = verify_lyapunov_equation(table, op, knot_pairs(table, 64), 1e-8);
    v.lyapunov_equation = v.lyapunov_equation && eq.pass;
    v.lyapunov_bound = v.lyapunov_bound && verify_lyapunov_bound(table, op, m, knots).pass;
    if (eq.pass) {
      v.lyapunov_datko = v.lyapunov_datko && lyapunov_to_datko(table, eq, m, std::max(1e-12, log_accuracy(op))).bounded;
    }
  }
  return v;
}

std::string describe(const VerdictProfile& v) {
  return fmt::format("weak={} datko={} equation={} bound={} table-datko={}", v.weak ? "certified" : "refuted",
                     v.datko_bounded ? "bounded" : "unbounded", v.lyapunov_equation ? "pass" : "fail",
                     v.lyapunov_bound ? "pass" : "fail",
                     v.lyapunov_datko ? "bounded" : "unbounded");
}

CriterionResult c8(const AcceptanceOptions& opt) {
  bool agree = true;
  std::string parts;
  for (const auto& m : corpus()) {
    const VerdictProfile v = verdict_profile(m.op, opt.seed);
    if (!v.decay) continue;
    const bool same = v.weak == v.datko_bounded && v.weak == v.lyapunov_bound && v.weak == v.lyapunov_datko &&
                      v.lyapunov_equation;
    agree = agree && same;
    parts += fmt::format("{}: {}{}; ", m.name, describe(v), same ? "" : " DISAGREE");
  }

  const auto& op = corpus_member("uniform_growth");
  const auto knots = horizon_times(0.0, 20.0, 0.25);
  const LyapunovTable table = build_lyapunov(op, 0.0, scalar(1.0), knots, 0.5);
  const double l1 = table.value(table.index_of(1.0));
  const double l1_err = std::abs(l1 + std::expm1(2.0) / 2.0);
  const EquationReport eq = verify_lyapunov_equation(table, op, knot_pairs(table, 256), 1e-8);
  double worst = 0.0;
  bool residual_ok = true;
  for (const auto& r : eq.residuals) {
    const double qe = std::max(table.quad_error, r.quad_error);
    const double scale = std::abs(table.value(table.index_of(r.t)));
    const double limit = 2.0 * qe * scale;
    if (r.residual > limit) residual_ok = false;
    if (scale > 0.0) worst = std::max(worst, r.residual / (2.0 * qe * scale));
  }
  return {8, criterion_title(8), agree && l1_err <= 1e-8 && residual_ok && eq.pass,
          fmt::format("{}L(1) error={:.2e}; max residual / (2 quad_error |L|)={:.3g}", parts, l1_err, worst)};
}

CriterionResult c9(const AcceptanceOptions& opt) {
  const auto& closed = corpus_member("planar_rotation");
  const auto& ode = corpus_member("planar_rotation_ode");
  std::vector<Vector> probes = random_unit_probes(2, 6, opt.seed);
  const auto dirs = planar_directions(4);
  probes.insert(probes.end(), dirs.begin(), dirs.end());
  // Deviation of the propagated transition matrix, relative to its norm.
  // Per-vector relative error is meaningless along the contracting direction,
  // where any rounding feeds the expanding mode.
  double err = 0.0;
  double vec_err = 0.0;
  const Vector e0 = Vector::Unit(2, 0);
  const Vector e1 = Vector::Unit(2, 1);
  for (double t0 : uniform_points(0.0, 0.5, 6.0)) {
    for (double t : uniform_points(t0, 0.5, t0 + 10.0)) {
      Matrix a(2, 2), b(2, 2);
      a << evaluate(closed, t, t0, e0), evaluate(closed, t, t0, e1);
      b << evaluate(ode, t, t0, e0), evaluate(ode, t, t0, e1);
      err = std::max(err, (a - b).norm() / a.norm());
      for (const auto& x : probes) {
        const Vector ax = a * x;
        vec_err = std::max(vec_err, (ax - evaluate(ode, t, t0, x)).norm() / (a.norm() * x.norm()));
      }
    }
  }
  err = std::max(err, vec_err);
  const VerdictProfile a = verdict_profile(closed, opt.seed);
  const VerdictProfile b = verdict_profile(ode, opt.seed);
  const bool same = a.decay == b.decay && a.weak == b.weak && a.uniform_refuted == b.uniform_refuted &&
                    a.datko_bounded == b.datko_bounded && a.lyapunov_bound == b.lyapunov_bound &&
                    a.lyapunov_equation == b.lyapunov_equation && a.lyapunov_datko == b.lyapunov_datko;
  return {9, criterion_title(9), err <= 1e-6 && same,
          fmt::format("max deviation relative to ||U||={:.2e}; closed: {}; ode: {}; uniform refuted {}/{}", err, describe(a),
                      describe(b), a.uniform_refuted, b.uniform_refuted)};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  }
  std::size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) count_b += e.is_regular_file() ? 1 : 0;
  if (files.size() != count_b) {
    diff = "file count differs";
    return false;
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  for (const auto& f : files) {
    if (!fs::exists(b / f) || slurp(a / f) != slurp(b / f)) {
      diff = f.string();
      return false;
    }
  }
  return true;
}

CriterionResult c10(const AcceptanceOptions& opt) {
  std::error_code ec;
  fs::remove_all(opt.scratch, ec);
  double worst = 0.0;
  int codes[2] = {-1, -1};
  for (int run = 0; run < 2; ++run) {
    CorpusOptions corpus_opt;
    corpus_opt.out = (opt.scratch / fmt::format("run{}", run)).string();
    corpus_opt.seed = opt.seed;
    std::ostringstream out, err;
    const auto start = Clock::now();
    codes[run] = cmd_corpus(corpus_opt, out, err);
    worst = std::max(worst, seconds_since(start));
  }
  std::string diff;
  const bool same = same_tree(opt.scratch / "run0", opt.scratch / "run1", diff);
  const bool pass = codes[0] == 0 && codes[1] == 0 && worst <= 60.0 && same;
  return {10, criterion_title(10), pass,
          fmt::format("exit codes {} {}, slowest run {:.1f} s, outputs {}", codes[0], codes[1], worst,
                      same ? "byte-identical" : "differ at " + diff)};
}

}  // namespace

std::vector<Vector> planar_directions(std::size_t count) {
  std::vector<Vector> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double a = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(count);
    Vector v(2);
    v << std::cos(a), std::sin(a);
    out.push_back(v);
  }
  return out;
}

std::string criterion_title(int id) {
  switch (id) {
    case 1: return "planar rotation weak certificate";
    case 2: return "planar rotation uniform refutation";
    case 3: return "spike kernel nonuniform certificate";
    case 4: return "spike kernel Barreira-Valls refutation";
    case 5: return "Datko necessity constant";
    case 6: return "sufficiency constants";
    case 7: return "discrete criterion chain";
    case 8: return "Lyapunov round-trip";
    case 9: return "ODE flow cross-validation";
    case 10: return "deterministic corpus suite";
  }
  throw InputError("unknown criterion " + std::to_string(id));
}

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
  try {
    switch (id) {
      case 1: return c1(options);
      case 2: return c2(options);
      case 3: return c3(options);
      case 4: return c4(options);
      case 5: return c5(options);
      case 6: return c6(options);
      case 7: return c7(options);
      case 8: return c8(options);
      case 9: return c9(options);
      case 10: return c10(options);
    }
  } catch (const Error& e) {
    return {id, criterion_title(id), false, std::string("error: ") + e.what()};
  }
  throw InputError("unknown criterion " + std::to_string(id));
}

}  // namespace evostab
