#include "evostab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "evostab/acceptance.hpp"
#include "evostab/certify.hpp"
#include "evostab/csv.hpp"
#include "evostab/datko.hpp"
#include "evostab/errors.hpp"
#include "evostab/lyapunov.hpp"
#include "evostab/numerics.hpp"

namespace fs = std::filesystem;

namespace evostab {
namespace {

constexpr double kUniformNuFloor = 1e-3;
constexpr int kBvBound = 50;
constexpr double kDatkoStep = 0.25;
constexpr double kLyapunovTol = 1e-8;

std::string verdict_word(bool ok, const char* yes, const char* no) { return ok ? yes : no; }

class Pipeline {
 public:
  Pipeline(const EvolutionOperator& op, const RunConfig& cfg, Analysis& out)
      : op_(op), cfg_(cfg), out_(out), grid_(cfg.scan_grid()),
        probes_(random_unit_probes(op.dimension(), cfg.probes, cfg.seed)) {}

  void run() {
    Json& r = out_.report;
    r["schema_version"] = kSchemaVersion;
    r["tool"] = "evostab";
    r["status"] = "running";
    r["error"] = nullptr;
    r["config"] = config_json();
    r["operator"] = {{"name", op_.name()}, {"kind", to_string(op_.kind())}, {"dimension", op_.dimension()}};
    Json probes = Json::array();
    for (const auto& x : probes_) probes.push_back(vector_json(x));
    r["probes"] = std::move(probes);
    trajectories();
    for (const auto& name : kAllCriteria) {
      if (!cfg_.wants(name)) continue;
      if (name == "decay") r["decay"] = decay();
      if (name == "uniform") r["uniform"] = uniform();
      if (name == "weak") r["weak"] = weak_section();
      if (name == "bv") r["bv"] = bv();
      if (name == "datko") r["datko"] = datko();
      if (name == "lyapunov") r["lyapunov"] = lyapunov();
    }
    r["status"] = "complete";
  }

 private:
  Json config_json() const {
    Json c;
    c["op"] = cfg_.operator_label();
    if (cfg_.kernel_knots) {
      Json knots = Json::array();
      for (const auto& k : *cfg_.kernel_knots) knots.push_back({number(k.t), number(k.value)});
      c["kernel_knots"] = std::move(knots);
      c["kernel_rate"] = number(cfg_.kernel_rate);
    }
    c["dimension"] = op_.dimension();
    c["probes"] = cfg_.probes;
    c["seed"] = cfg_.seed;
    c["p"] = number(cfg_.p);
    c["horizon"] = number(cfg_.horizon);
    c["step"] = number(cfg_.step);
    c["t0_grid"] = numbers_json(grid_.t0s);
    c["criteria"] = cfg_.criteria;
    return c;
  }

  void add_series(const std::string& name, const std::string& header, std::span<const double> xs,
                  std::span<const double> ys) {
    std::ostringstream s;
    write_series_csv(s, header, xs, ys);
    out_.series.emplace_back(name, s.str());
  }

  void trajectories() {
    const double t0 = grid_.t0s.front();
    const auto times = grid_.sample_times(op_, t0);
    for (std::size_t k = 0; k < probes_.size(); ++k) {
      const auto logs = orbit_log_norms(op_, t0, probes_[k], times);
      add_series(fmt::format("trajectory_probe{}.csv", k), "t,log_norm", times, logs);
    }
  }

  Json decay() {
    const DecayFitOptions options;
    const DecayFit fit = fit_decay(op_, probes_, grid_, options);
    Json params;
    params["required_rate"] = number(fit.required_rate);
    params["omega_max"] = number(options.omega_max);
    params["log_M_max"] = number(options.log_m_max);
    Json witnesses = Json::array();
    bool certified = false;
    if (fit.certificate) {
      const CheckResult check = check_decay(op_, *fit.certificate, probes_, grid_);
      certified = check.pass;
      params["M"] = number(fit.certificate->m());
      params["log_M"] = number(fit.certificate->log_m);
      params["omega"] = number(fit.certificate->omega);
      params["check"] = check_json(check);
      if (check.worst) witnesses.push_back(witness_json(*check.worst));
    }
    if (fit.refutation) witnesses.push_back(witness_json(*fit.refutation));
    decay_ = certified ? fit.certificate : std::nullopt;
    return section("exponential-decay", std::move(params), grid_json(grid_),
                   verdict_word(certified, "certified", "refuted"), std::move(witnesses));
  }

  Json uniform() {
    const double t0 = grid_.t0s.front();
    const auto times = grid_.sample_times(op_, t0);
    std::vector<std::vector<double>> logs;
    double nu = std::numeric_limits<double>::infinity();
    for (const auto& x : probes_) {
      logs.push_back(orbit_log_norms(op_, t0, x, times));
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < times.size(); ++i) pts.emplace_back(times[i], logs.back()[i]);
      if (pts.size() >= 2) nu = std::min(nu, fit_log_slope(pts).slope);
    }
    nu = std::max(std::isfinite(nu) ? nu : kUniformNuFloor, kUniformNuFloor);
    const WeakSearchOptions caps;
    double log_n = 0.0;
    for (const auto& l : logs) {
      for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] - t0 > grid_.s_span + 1e-9) break;
        for (std::size_t j = i; j < times.size() && times[j] - times[i] <= grid_.d_span + 1e-9; ++j) {
          log_n = std::max(log_n, nu * (times[j] - times[i]) - (l[j] - l[i]));
        }
      }
    }
    log_n = std::min(log_n, std::log(caps.n_max));
    const UniformCertificate cand{std::exp(log_n), nu};
    std::vector<Vector> checked = probes_;
    const auto adversarial = adversarial_probes(op_, grid_.t0s);
    checked.insert(checked.end(), adversarial.begin(), adversarial.end());
    const CheckResult check = check_uniform(op_, cand, checked, grid_);

    Json params;
    params["candidate"] = "auto-fit";
    params["N"] = number(cand.n);
    params["nu"] = number(cand.nu);
    params["random_probes"] = probes_.size();
    params["adversarial_probes"] = adversarial.size();
    params["check"] = check_json(check);
    Json witnesses = Json::array();
    if (check.worst && !check.pass) {
      Json w = witness_json(*check.worst);
      w["direction"] = vector_json(checked[check.worst->probe]);
      witnesses.push_back(std::move(w));
    }
    return section("uniform-instability", std::move(params), grid_json(grid_),
                   verdict_word(check.pass, "certified", "refuted"), std::move(witnesses));
  }

  const WeakResult& weak() {
    if (!weak_) weak_ = certify_weak(op_, probes_, grid_);
    return *weak_;
  }

  Json weak_section() {
    const WeakSearchOptions options;
    const WeakResult& w = weak();
    Json params;
    params["n_max"] = number(options.n_max);
    params["nu_min"] = number(options.nu_min);
    Json per = Json::array();
    for (const auto& p : w.per_probe) {
      per.push_back({{"t0", number(p.t0)}, {"N", number(p.n)}, {"nu", number(p.nu)},
                     {"feasible", p.feasible}, {"excluded", p.excluded}});
    }
    params["per_probe"] = std::move(per);
    Json witnesses = Json::array();
    bool certified = false;
    if (w.certificate) {
      const CheckResult check = check_weak(op_, *w.certificate, probes_, grid_);
      certified = check.pass;
      params["N"] = number(w.certificate->n);
      params["nu"] = number(w.certificate->nu);
      params["t0_of"] = numbers_json(w.certificate->t0_of);
      params["check"] = check_json(check);
      if (check.worst) witnesses.push_back(witness_json(*check.worst));
    } else {
      for (std::size_t k = 0; k < w.per_probe.size(); ++k) {
        const auto& p = w.per_probe[k];
        if (p.excluded || p.feasible) continue;
        witnesses.push_back({{"probe", k}, {"t0", number(p.t0)}, {"best_N", number(p.n)}, {"best_nu", number(p.nu)}});
      }
    }
    return section("weak-instability", std::move(params), grid_json(grid_),
                   verdict_word(certified, "certified", "refuted"), std::move(witnesses));
  }

  Json bv() {
    // Fix N = nu = 1 and report the smallest alpha on the grid that survives.
    const double n = 1.0;
    const double nu = 1.0;
    std::optional<double> alpha;
    std::optional<BvWitness> last;
    double last_alpha = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double a = 0.5 * i;
      const auto w = refute_bv(op_, BVCertificate{n, a, nu}, kBvBound, probes_, grid_);
      if (!w) {
        alpha = a;
        break;
      }
      last = w;
      last_alpha = a;
    }
    Json params;
    params["N"] = number(n);
    params["nu"] = number(nu);
    params["alpha"] = alpha ? number(*alpha) : Json(nullptr);
    params["alpha_grid"] = {{"start", 0.0}, {"step", 0.5}, {"stop", 5.0}};
    params["witness_bound"] = kBvBound;
    Json witnesses = Json::array();
    if (last) {
      Json w = bv_witness_json(*last);
      w["alpha"] = number(last_alpha);
      witnesses.push_back(std::move(w));
    }
    return section("barreira-valls-instability", std::move(params), grid_json(grid_),
                   alpha ? "not-refuted" : "refuted", std::move(witnesses));
  }

  // Constants from the weak certificate, or the loosest ones its search allows.
  std::pair<double, double> weak_constants() {
    const WeakSearchOptions options;
    if (weak().certificate) return {weak().certificate->n, weak().certificate->nu};
    return {options.n_max, options.nu_min};
  }

  std::vector<double> weak_hints() {
    if (!weak().certificate) return {};
    return weak().certificate->t0_of;
  }

  const DatkoReport& datko_report(double p) {
    if (!datko_ || datko_->p != p) {
      const auto [n, nu] = weak_constants();
      DatkoOptions options;
      options.p = p;
      options.k_ceiling = necessity_constant(n, nu, p);
      options.t0_search = grid_.t0s;
      options.t0_hints = weak_hints();
      options.horizon = cfg_.horizon;
      options.step = kDatkoStep;
      datko_ = datko_verdict(op_, probes_, options);
    }
    return *datko_;
  }

  Json datko() {
    const DatkoReport& d = datko_report(cfg_.p);
    for (std::size_t k = 0; k < probes_.size(); ++k) {
      if (d.per_probe[k].excluded) continue;
      const double t0 = d.t0_of[k];
      const auto times = horizon_times(t0, cfg_.horizon, kDatkoStep);
      const RatioScan scan = datko_ratio_scan(op_, probes_[k], t0, cfg_.p, times);
      add_series(fmt::format("datko_ratio_probe{}.csv", k), "t,log_ratio", scan.times, scan.log_ratio);
      const auto grid = knot_aware_grid(op_, t0, t0 + cfg_.horizon);
      std::ostringstream s;
      write_cumulative_csv(s, log_integral_power(op_, t0, probes_[k], cfg_.p, grid));
      out_.series.emplace_back(fmt::format("cumulative_probe{}.csv", k), s.str());
    }
    Json params = datko_json(d);
    params["ceiling_source"] = weak().certificate ? "weak-certificate" : "search-caps";
    Json witnesses = Json::array();
    for (const auto& p : d.per_probe) {
      if (p.excluded || p.bounded) continue;
      witnesses.push_back({{"probe", p.probe}, {"t0", number(p.t0)}, {"t", number(p.t_at_max)},
                           {"log_ratio", number(p.log_k)}});
    }
    if (witnesses.empty() && d.worst_probe) {
      const auto& p = d.per_probe[*d.worst_probe];
      witnesses.push_back({{"probe", p.probe}, {"t0", number(p.t0)}, {"t", number(p.t_at_max)},
                           {"log_ratio", number(p.log_k)}});
    }
    Json grid = {{"t0_search", numbers_json(d.t0_search)}, {"horizon", number(d.horizon)}, {"step", number(d.step)}};
    return section("datko-integral", std::move(params), std::move(grid), to_string(d.verdict), std::move(witnesses));
  }

  Json lyapunov() {
    const auto [n, nu] = weak_constants();
    const double m = lyapunov_bound_constant(n, nu);
    const auto hints = weak_hints();
    const DatkoReport* d = hints.empty() ? &datko_report(2.0) : nullptr;
    bool equation_ok = true;
    bool bound_ok = true;
    bool datko_ok = true;
    Json per = Json::array();
    Json witnesses = Json::array();
    for (std::size_t k = 0; k < probes_.size(); ++k) {
      const double t0 = hints.empty() ? d->t0_of[k] : hints[k];
      const auto knots = horizon_times(t0, cfg_.horizon, kDatkoStep);
      const LyapunovTable table = build_lyapunov(op_, t0, probes_[k], knots, m);
      const auto pairs = knot_pairs(table, 64);
      const EquationReport eq = verify_lyapunov_equation(table, op_, pairs, kLyapunovTol);
      const BoundReport bound = verify_lyapunov_bound(table, op_, m, knots);
      std::ostringstream s;
      write_lyapunov_csv(s, table);
      out_.series.emplace_back(fmt::format("lyapunov_probe{}.csv", k), s.str());
      Json e;
      e["probe"] = k;
      e["t0"] = number(t0);
      e["quad_error"] = number(table.quad_error);
      e["equation"] = equation_json(eq);
      e["bound"] = bound_json(bound);
      equation_ok = equation_ok && eq.pass;
      bound_ok = bound_ok && bound.pass;
      if (eq.pass) {
        const LyapunovDatko ld = lyapunov_to_datko(table, eq, m, std::max(1e-12, log_accuracy(op_)));
        e["datko_log_K"] = number(ld.log_k_measured);
        e["datko_bounded"] = ld.bounded;
        datko_ok = datko_ok && ld.bounded;
      }
      if (!eq.pass && eq.worst) {
        witnesses.push_back({{"probe", k}, {"check", "equation"}, {"t", number(eq.worst->t)},
                             {"s", number(eq.worst->s)}, {"residual", number(eq.worst->residual)}});
      }
      if (!bound.pass && bound.worst) {
        witnesses.push_back({{"probe", k}, {"check", "bound"}, {"t", number(bound.worst->t)},
                             {"log_violation", number(bound.worst->log_violation)}});
      }
      per.push_back(std::move(e));
    }
    Json params;
    params["m"] = number(m);
    params["m_source"] = weak().certificate ? "weak-certificate" : "search-caps";
    params["tol"] = number(kLyapunovTol);
    params["datko_bounded"] = datko_ok;
    params["per_probe"] = std::move(per);
    Json grid = {{"horizon", number(cfg_.horizon)}, {"step", number(kDatkoStep)}};
    const std::string verdict = !equation_ok ? "equation-failed" : bound_ok ? "verified" : "bound-failed";
    return section("lyapunov-function", std::move(params), std::move(grid), verdict, std::move(witnesses));
  }

  const EvolutionOperator& op_;
  const RunConfig& cfg_;
  Analysis& out_;
  ScanGrid grid_;
  std::vector<Vector> probes_;
  std::optional<DecayCertificate> decay_;
  std::optional<WeakResult> weak_;
  std::optional<DatkoReport> datko_;
};

Json error_json(const char* type, const std::string& message) {
  return {{"type", type}, {"message", message}};
}

}  // namespace

Analysis analyze(const EvolutionOperator& op, const RunConfig& config) {
  Analysis out;
  Pipeline pipeline(op, config, out);
  try {
    pipeline.run();
  } catch (const AccuracyError& e) {
    out.exit_code = kExitAccuracy;
    out.report["status"] = "partial";
    out.report["error"] = error_json("accuracy", e.what());
    out.report["error"]["estimate"] = number(e.estimate());
  } catch (const IntegrationError& e) {
    out.exit_code = kExitAccuracy;
    out.report["status"] = "partial";
    out.report["error"] = error_json("integration", e.what());
    out.report["error"]["last_time"] = number(e.last_time());
  } catch (const Error& e) {
    out.exit_code = kExitAccuracy;
    out.report["status"] = "partial";
    out.report["error"] = error_json("evaluation", e.what());
  }
  return out;
}

int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const EvolutionOperator op = config.build_operator();
  const fs::path dir = config.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "cannot create output directory " << dir.string() << ": " << ec.message() << "\n";
    return kExitConfig;
  }
  const Analysis a = analyze(op, config);
  write_text(dir / "report.json", dump(a.report));
  for (const auto& [name, text] : a.series) write_text(dir / name, text);

  out << "operator " << op.name() << " (" << a.report["status"].get<std::string>() << ")\n";
  for (const auto& name : kAllCriteria) {
    if (a.report.contains(name)) out << fmt::format("  {:<9} {}\n", name, a.report[name]["verdict"].get<std::string>());
  }
  if (a.exit_code != kExitOk) err << "error: " << a.report["error"]["message"].get<std::string>() << "\n";
  out << "wrote " << (dir / "report.json").string() << "\n";
  return a.exit_code;
}

int cmd_corpus(const CorpusOptions& options, std::ostream& out, std::ostream& err) {
  if (options.out.empty()) {
    err << "corpus needs an output directory\n";
    return kExitConfig;
  }
  const fs::path dir = options.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "cannot create output directory " << dir.string() << ": " << ec.message() << "\n";
    return kExitConfig;
  }

  std::vector<NamedOperator> members = corpus();
  members.insert(members.end(), options.extra.begin(), options.extra.end());
  std::vector<std::string> failures;
  Json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["seed"] = options.seed;

  out << fmt::format("{:<22} {:>12} {:>12}  {}\n", "axioms", "identity", "cocycle", "result");
  Json axioms = Json::array();
  const auto axiom_grid = uniform_points(0.0, 0.5, 6.0);
  for (const auto& m : members) {
    const auto probes = random_unit_probes(m.op.dimension(), 3, options.seed);
    const double tol = std::max(1e-10, log_accuracy(m.op));
    AxiomReport r;
    std::string problem;
    try {
      r = verify_axioms(m.op, axiom_grid, probes, tol);
    } catch (const Error& e) {
      r.pass = false;
      problem = e.what();
    }
    if (!r.pass) {
      if (problem.empty()) {
        problem = r.identity_residual > tol ? "identity axiom violated" : "cocycle axiom violated";
      }
      failures.push_back("axioms: " + m.name + ": " + problem);
    }
    out << fmt::format("{:<22} {:>12.3e} {:>12.3e}  {}\n", m.name, r.identity_residual, r.cocycle_residual,
                       r.pass ? "PASS" : "FAIL " + problem);
    axioms.push_back({{"operator", m.name}, {"identity_residual", number(r.identity_residual)},
                      {"cocycle_residual", number(r.cocycle_residual)}, {"tolerance", number(tol)},
                      {"pass", r.pass}, {"problem", problem}});
  }
  summary["axioms"] = std::move(axioms);

  out << fmt::format("\n{:<22} {:>8} {:>9} {:>9} {:>12} {:>16} {:>14}\n", "analysis", "decay", "uniform",
                     "weak", "bv", "datko", "lyapunov");
  Json analyses = Json::array();
  for (const auto& m : members) {
    RunConfig cfg;
    cfg.op = m.name;
    cfg.dimension = m.op.dimension();
    cfg.seed = options.seed;
    cfg.out = (dir / m.name).string();
    const Analysis a = analyze(m.op, cfg);
    fs::create_directories(cfg.out);
    write_text(fs::path(cfg.out) / "report.json", dump(a.report));
    for (const auto& [name, text] : a.series) write_text(fs::path(cfg.out) / name, text);
    auto verdict = [&](const char* key) -> std::string {
      return a.report.contains(key) ? a.report[key]["verdict"].get<std::string>() : "-";
    };
    if (a.exit_code != kExitOk) failures.push_back("analysis: " + m.name + ": " + a.report["error"]["message"].get<std::string>());
    out << fmt::format("{:<22} {:>8} {:>9} {:>9} {:>12} {:>16} {:>14}\n", m.name, verdict("decay"),
                       verdict("uniform"), verdict("weak"), verdict("bv"), verdict("datko"), verdict("lyapunov"));
    Json row = {{"operator", m.name}, {"status", a.report["status"]}, {"exit", a.exit_code}};
    for (const auto& key : kAllCriteria) row[key] = verdict(key.c_str());
    analyses.push_back(std::move(row));
  }
  summary["analyses"] = std::move(analyses);

  Json criteria = Json::array();
  if (options.criteria) {
    out << "\ncriteria\n";
    AcceptanceOptions acc;
    acc.seed = options.seed;
    for (int id = 1; id <= 9; ++id) {
      const CriterionResult c = run_criterion(id, acc);
      out << fmt::format("  {:>2} {} {}: {}\n", c.id, c.pass ? "PASS" : "FAIL", c.title, c.detail);
      if (!c.pass) failures.push_back(fmt::format("criterion {}: {}", c.id, c.title));
      criteria.push_back({{"id", c.id}, {"title", c.title}, {"pass", c.pass}, {"detail", c.detail}});
    }
  }
  summary["criteria"] = std::move(criteria);
  summary["failures"] = failures;
  summary["pass"] = failures.empty();
  write_text(dir / "summary.json", dump(summary));

  if (failures.empty()) {
    out << "\ncorpus: all checks passed\n";
    return kExitOk;
  }
  out << "\ncorpus: " << failures.size() << " failure(s)\n";
  for (const auto& f : failures) err << "FAIL " << f << "\n";
  return kExitFailure;
}

}  // namespace evostab
