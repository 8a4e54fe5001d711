#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evostab/errors.hpp"
#include "evostab/log_magnitude.hpp"
#include "evostab/operators.hpp"
#include "evostab/scan_grid.hpp"
#include "support.hpp"

using namespace evostab;
using testing::scalar;
using testing::vec2;

namespace {

// U(t,s)x = e^{t-s}<x,u(s)>u(t) + e^{-(t-s)}<x,w(s)>w(t), u = (cos, sin), w = (sin, -cos).
Vector rotation_oracle(double t, double s, const Vector& x) {
  const Vector us = vec2(std::cos(s), std::sin(s));
  const Vector ws = vec2(std::sin(s), -std::cos(s));
  const Vector ut = vec2(std::cos(t), std::sin(t));
  const Vector wt = vec2(std::sin(t), -std::cos(t));
  return std::exp(t - s) * x.dot(us) * ut + std::exp(-(t - s)) * x.dot(ws) * wt;
}

EvolutionOperator broken_operator() {
  ScalarKernel k{[](double t, double s) { return (t - s) * (t - s); }, std::nullopt, "(t-s)^2"};
  return EvolutionOperator("broken", 1, k);
}

}  // namespace

TEST_CASE("log magnitudes multiply and add without overflow") {
  const auto a = LogMagnitude::from_log(800.0);
  CHECK((a * a).log_value() == doctest::Approx(1600.0));
  CHECK((a / a).log_value() == doctest::Approx(0.0));
  CHECK((a + a).log_value() == doctest::Approx(800.0 + std::log(2.0)));
  CHECK((LogMagnitude::zero() + a) == a);
  CHECK(LogMagnitude::zero().pow(2.0).is_zero());
  CHECK(LogMagnitude::from_linear(3.0).to_linear() == doctest::Approx(3.0));
  const double xs[] = {-1000.0, -1000.0};
  CHECK(log_sum_exp(xs) == doctest::Approx(-1000.0 + std::log(2.0)));
  CHECK(LogMagnitude::one() < a);
}

TEST_CASE("corpus members and their closed forms") {
  const auto members = corpus();
  REQUIRE(members.size() == 5);
  CHECK(members[0].name == "uniform_growth");
  CHECK(corpus_member("planar_rotation").dimension() == 2);
  CHECK(corpus_member("planar_rotation_ode").kind() == OperatorKind::ode_flow);
  CHECK(orbit_log_norm(corpus_member("stable"), 3.0, 0.0, scalar(1.0)).log_value() == doctest::Approx(-3.0));
  CHECK(orbit_log_norm(corpus_member("uniform_growth"), 4.5, 1.0, scalar(-2.0)).log_value() ==
        doctest::Approx(3.5 + std::log(2.0)));
  CHECK_THROWS_AS(corpus_member("nope"), InputError);
}

TEST_CASE("spike profile matches its knots") {
  const LogProfile u = LogProfile::spikes();
  for (int n = 2; n <= 60; ++n) {
    CHECK(u(n) == 0.0);
    CHECK(u(n + 1.0 / n) == doctest::Approx(double(n) * n));
  }
  CHECK(u(0.0) == 0.0);
  CHECK(u(1.7) == 0.0);
  // Linear pieces: halfway up the rise and down the fall.
  CHECK(u(3.0 + 1.0 / 6.0) == doctest::Approx(4.5));
  CHECK(u(3.0 + 1.0 / 3.0 + (2.0 / 3.0) / 2.0) == doctest::Approx(4.5));
  const auto bps = u.breakpoints(2.0, 4.0);
  CHECK(bps.size() == 5);
  CHECK(bps[1] == doctest::Approx(2.5));
  const auto& kernel = std::get<ScalarKernel>(corpus_member("nonuniform_spikes").impl());
  // ||U(n+1/n, n)|| = e^{-n^2 + 1/n}.
  CHECK(kernel.log_amplitude(5.2, 5.0) == doctest::Approx(-25.0 + 0.2));
}

TEST_CASE("knot profiles validate their input") {
  CHECK_THROWS_AS(LogProfile::from_knots({}), InputError);
  CHECK_THROWS_AS(LogProfile::from_knots({{1.0, 0.0}, {1.0, 2.0}}), InputError);
  CHECK_THROWS_AS(LogProfile::from_knots({{0.0, std::nan("")}}), InputError);
  const auto p = LogProfile::from_knots({{0.0, 0.0}, {2.0, 4.0}});
  CHECK(p(1.0) == doctest::Approx(2.0));
  CHECK(p(-1.0) == 0.0);
  CHECK(p(9.0) == 4.0);
}

TEST_CASE("planar rotation agrees with the eigen-frame oracle") {
  const auto& op = corpus_member("planar_rotation");
  testing::Gen gen(3);
  for (int i = 0; i < 200; ++i) {
    const double s = gen.uniform(0.0, 8.0);
    const double t = s + gen.uniform(0.0, 12.0);
    const Vector x = gen.vector(2);
    const Vector want = rotation_oracle(t, s, x);
    CHECK((evaluate(op, t, s, x) - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
    CHECK(orbit_log_norm(op, t, s, x).log_value() == doctest::Approx(std::log(want.norm())).epsilon(1e-12));
  }
  // Exactly contracting direction, evaluated in log form without cancellation.
  const double t0 = 1.3;
  const Vector x = vec2(-std::sin(t0), std::cos(t0));
  CHECK(orbit_log_norm(op, t0 + 400.0, t0, x).log_value() == doctest::Approx(-400.0));
}

TEST_CASE("coefficient matrix generates the rotation flow") {
  const auto& op = corpus_member("planar_rotation");
  const double h = 1e-5;
  for (double t : {0.3, 1.1, 2.9, 5.0}) {
    const Vector x = vec2(0.6, -0.8);
    const Vector d = (evaluate(op, t + h, 0.0, x) - evaluate(op, t - h, 0.0, x)) / (2 * h);
    const Vector ax = planar_rotation_coefficient(t) * evaluate(op, t, 0.0, x);
    CHECK((d - ax).norm() <= 1e-6 * ax.norm());
  }
}

TEST_CASE("ode flow reproduces the closed form") {
  const auto& closed = corpus_member("planar_rotation");
  const auto& ode = corpus_member("planar_rotation_ode");
  for (double t0 : {0.0, 0.8, 2.5}) {
    for (double t : {t0, t0 + 0.4, t0 + 3.0, t0 + 9.5}) {
      const Vector x = vec2(0.3, 0.9);
      const Vector a = evaluate(closed, t, t0, x);
      CHECK((evaluate(ode, t, t0, x) - a).norm() <= 1e-7 * a.norm());
    }
  }
  const auto times = uniform_points(1.0, 0.5, 11.0);
  const auto logs = orbit_log_norms(ode, 1.0, vec2(1.0, 0.0), times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(logs[i] == doctest::Approx(orbit_log_norm(closed, times[i], 1.0, vec2(1.0, 0.0)).log_value()).epsilon(1e-7));
  }
}

TEST_CASE("ode flow reports integration failure") {
  // x' = x / (1 - t)^2 escapes to infinity at t = 1.
  OdeFlow flow;
  flow.coefficient = [](double t) { return Matrix::Constant(1, 1, 1.0 / ((1.0 - t) * (1.0 - t))); };
  flow.max_steps = 20000;
  const EvolutionOperator op("blowup", 1, flow);
  CHECK_THROWS_AS(evaluate(op, 2.0, 0.0, scalar(1.0)), IntegrationError);
}

TEST_CASE("evaluation rejects bad arguments") {
  const auto& op = corpus_member("planar_rotation");
  CHECK_THROWS_AS(evaluate(op, 1.0, 2.0, vec2(1, 0)), OrderingError);
  CHECK_THROWS_AS(evaluate(op, 1.0, -0.5, vec2(1, 0)), InputError);
  CHECK_THROWS_AS(evaluate(op, 2.0, 1.0, scalar(1.0)), InputError);
  CHECK(orbit_log_norm(op, 3.0, 1.0, vec2(0, 0)).is_zero());
  CHECK_THROWS_AS(EvolutionOperator("bad", 3, PlanarRotation{}), InputError);
  CHECK_THROWS_AS(EvolutionOperator("bad", 0, exponential_kernel(1.0)), InputError);
}

TEST_CASE("identity and cocycle hold for random triples") {
  testing::Gen gen(11);
  for (const auto& m : corpus()) {
    const double tol = m.op.kind() == OperatorKind::ode_flow ? 1e-6 : 1e-10;
    for (int i = 0; i < 40; ++i) {
      const auto trip = gen.triple(0.0, 9.0);
      const double r = trip[0], s = trip[1], t = trip[2];
      const Vector x = gen.vector(m.op.dimension());
      CHECK((evaluate(m.op, r, r, x) - x).norm() <= tol * x.norm());
      const Vector direct = evaluate(m.op, t, r, x);
      const Vector composed = evaluate(m.op, t, s, evaluate(m.op, s, r, x));
      CHECK((direct - composed).norm() <= tol * std::max(1.0, direct.norm()));
    }
  }
}

TEST_CASE("axiom sweep passes the corpus and names a broken operator") {
  const auto grid = uniform_points(0.0, 0.5, 5.0);
  for (const auto& m : corpus()) {
    const double tol = std::max(1e-10, log_accuracy(m.op));
    const std::vector<Vector> probes = {Vector::Ones(static_cast<Eigen::Index>(m.op.dimension()))};
    const AxiomReport r = verify_axioms(m.op, grid, probes, tol);
    CHECK_MESSAGE(r.pass, m.name);
  }
  const std::vector<Vector> probes = {scalar(1.0)};
  const AxiomReport bad = verify_axioms(broken_operator(), grid, probes, 1e-10);
  CHECK_FALSE(bad.pass);
  CHECK(bad.identity_residual == 0.0);
  CHECK(bad.cocycle_residual > 0.5);
  REQUIRE(bad.cocycle_witness);
  CHECK(bad.cocycle_witness->t > bad.cocycle_witness->r);
  CHECK_THROWS_AS(verify_axioms(broken_operator(), std::vector<double>{2.0, 1.0}, probes, 1e-10), InputError);
}

TEST_CASE("sample times include kernel breakpoints") {
  ScanGrid g = ScanGrid::defaults();
  CHECK(g.t0s.size() == 26);
  const auto times = g.sample_times(corpus_member("nonuniform_spikes"), 2.0);
  CHECK(std::find(times.begin(), times.end(), 2.5) != times.end());
  CHECK(std::find(times.begin(), times.end(), 3.0 + 1.0 / 3.0) != times.end());
  CHECK(times.back() == doctest::Approx(32.0));
  CHECK(std::is_sorted(times.begin(), times.end()));
}
