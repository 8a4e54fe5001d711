#include "evostab/report.hpp"

#include <cmath>
#include <fstream>

#include "evostab/errors.hpp"

namespace evostab {

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json numbers_json(std::span<const double> xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

Json section(const std::string& kind, Json parameters, Json grid, const std::string& verdict,
             Json witnesses) {
  Json s;
  s["kind"] = kind;
  s["parameters"] = std::move(parameters);
  s["grid"] = std::move(grid);
  s["verdict"] = verdict;
  s["witnesses"] = witnesses.is_array() ? std::move(witnesses) : Json::array();
  return s;
}

Json grid_json(const ScanGrid& grid) {
  Json g;
  g["t0s"] = numbers_json(grid.t0s);
  g["step"] = number(grid.step);
  g["s_span"] = number(grid.s_span);
  g["d_span"] = number(grid.d_span);
  g["t_max"] = number(grid.t_max);
  g["knot_aware"] = grid.knot_aware;
  return g;
}

Json witness_json(const Witness& w) {
  Json j;
  j["t0"] = number(w.t0);
  j["s"] = number(w.s);
  j["t"] = number(w.t);
  j["probe"] = w.probe;
  j["log_violation"] = number(w.log_violation);
  return j;
}

Json check_json(const CheckResult& r) {
  Json j;
  j["pass"] = r.pass;
  j["points"] = r.points;
  j["max_violation"] = number(r.max_violation);
  return j;
}

Json bv_witness_json(const BvWitness& w) {
  Json j;
  j["t"] = number(w.t);
  j["t0"] = number(w.t0);
  j["n"] = w.n;
  j["probe"] = w.probe;
  j["log_deficit"] = number(w.deficit);
  return j;
}

Json datko_json(const DatkoReport& r) {
  Json j;
  j["p"] = number(r.p);
  j["K_ceiling"] = number(r.k_ceiling);
  j["log_K_measured"] = number(r.log_k_measured);
  j["K_measured"] = number(std::exp(r.log_k_measured));
  j["horizon"] = number(r.horizon);
  j["step"] = number(r.step);
  j["t0_of"] = numbers_json(r.t0_of);
  j["degenerate_horizon"] = r.degenerate_horizon;
  j["quad_error"] = number(r.quad_error);
  Json probes = Json::array();
  for (const auto& p : r.per_probe) {
    Json e;
    e["probe"] = p.probe;
    e["t0"] = number(p.t0);
    e["log_K"] = number(p.log_k);
    e["t_at_max"] = number(p.t_at_max);
    e["bounded"] = p.bounded;
    e["trend"] = p.trend;
    e["excluded"] = p.excluded;
    probes.push_back(std::move(e));
  }
  j["per_probe"] = std::move(probes);
  return j;
}

Json equation_json(const EquationReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["tol"] = number(r.tol);
  j["pairs"] = r.residuals.size();
  j["max_residual"] = number(r.max_residual);
  j["max_relative_residual"] = number(r.max_relative);
  j["table_quad_error"] = number(r.table_quad_error);
  j["independent_quad_error"] = number(r.independent_quad_error);
  return j;
}

Json bound_json(const BoundReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["m"] = number(r.m);
  j["points"] = r.points;
  j["max_violation"] = number(r.max_violation);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace evostab
