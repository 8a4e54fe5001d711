#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "evostab/acceptance.hpp"
#include "evostab/certify.hpp"
#include "evostab/errors.hpp"
#include "support.hpp"

using namespace evostab;
using testing::scalar;
using testing::vec2;

namespace {

ScanGrid small_grid() {
  ScanGrid g;
  g.t0s = {0.0, 0.5, 1.0, 2.0};
  g.step = 0.5;
  g.s_span = 5.0;
  g.d_span = 8.0;
  return g;
}

const std::vector<Vector> kScalarProbes = {scalar(1.0), scalar(-3.0)};

}  // namespace

TEST_CASE("decay fit and check") {
  const auto& stable = corpus_member("stable");
  const DecayFit fit = fit_decay(stable, kScalarProbes, small_grid());
  REQUIRE(fit.certificate);
  CHECK(fit.required_rate == doctest::Approx(1.0));
  CHECK(fit.certificate->omega == doctest::Approx(1.0));
  CHECK(fit.certificate->m() == 1.0);
  CHECK(check_decay(stable, {0.0, 1.0}, kScalarProbes, small_grid()).pass);
  const CheckResult tight = check_decay(stable, {0.0, 0.5}, kScalarProbes, small_grid());
  CHECK_FALSE(tight.pass);
  REQUIRE(tight.worst);
  // Worst point is the longest window: 0.5 * 13.
  CHECK(tight.max_violation == doctest::Approx(6.5));

  const DecayFit growth = fit_decay(corpus_member("uniform_growth"), kScalarProbes, small_grid());
  REQUIRE(growth.certificate);
  CHECK(growth.certificate->omega == doctest::Approx(1e-6));

  const DecayFit spikes = fit_decay(corpus_member("nonuniform_spikes"), kScalarProbes, ScanGrid::defaults());
  CHECK_FALSE(spikes.certificate);
  REQUIRE(spikes.refutation);
  CHECK(spikes.refutation->log_violation > 0.0);
  CHECK_THROWS_AS(check_decay(stable, {-1.0, 1.0}, kScalarProbes, small_grid()), InputError);
}

TEST_CASE("uniform instability on the growth kernel") {
  const auto& op = corpus_member("uniform_growth");
  const CheckResult ok = check_uniform(op, {1.0, 1.0}, kScalarProbes, small_grid());
  CHECK(ok.pass);
  CHECK(ok.max_violation == doctest::Approx(0.0).epsilon(1e-12));
  const CheckResult too_fast = check_uniform(op, {1.0, 1.1}, kScalarProbes, small_grid());
  CHECK_FALSE(too_fast.pass);
  REQUIRE(too_fast.worst);
  CHECK(too_fast.worst->t - too_fast.worst->s == doctest::Approx(8.0));
  CHECK(check_uniform(op, {std::exp(0.8), 1.1}, kScalarProbes, small_grid()).pass);
}

TEST_CASE("nonuniform certificate with N(t) = u(t)") {
  const auto& op = corpus_member("nonuniform_spikes");
  const LogProfile u = LogProfile::spikes();
  const NonuniformCertificate cert{[u](double t) { return u(t); }, 1.0, "u"};
  CHECK(check_nonuniform(op, cert, kScalarProbes, ScanGrid::defaults()).pass);
  const NonuniformCertificate flat{[](double) { return 0.0; }, 1.0, "1"};
  CHECK_FALSE(check_nonuniform(op, flat, kScalarProbes, ScanGrid::defaults()).pass);
}

TEST_CASE("Barreira-Valls witnesses") {
  const auto& spikes = corpus_member("nonuniform_spikes");
  const auto w = refute_bv(spikes, {std::numbers::e, 1.0, 1.0}, 50);
  REQUIRE(w);
  CHECK(w->n == 2);
  CHECK(w->t == doctest::Approx(2.5));
  CHECK(w->deficit == doctest::Approx(0.5).epsilon(1e-12));

  const auto& stable = corpus_member("stable");
  CHECK_FALSE(refute_bv(stable, {1.0, 2.0, 1.0}, 50));
  const auto below = refute_bv(stable, {1.0, 1.5, 1.0}, 50);
  REQUIRE(below);
  CHECK(below->n == 0);
  CHECK_THROWS_AS(refute_bv(stable, {1.0, 1.0, 1.0}, 1), InputError);
}

TEST_CASE("weak certificates") {
  const WeakResult growth = certify_weak(corpus_member("uniform_growth"), kScalarProbes, small_grid());
  REQUIRE(growth.certificate);
  CHECK(growth.certificate->n == 1.0);
  CHECK(growth.certificate->nu == doctest::Approx(1.0));
  CHECK_FALSE(certify_weak(corpus_member("stable"), kScalarProbes, ScanGrid::defaults()).certificate);
  CHECK_FALSE(certify_weak(corpus_member("nonuniform_spikes"), kScalarProbes, ScanGrid::defaults()).certificate);

  const auto& planar = corpus_member("planar_rotation");
  const auto dirs = planar_directions(8);
  const WeakResult r = certify_weak(planar, dirs, ScanGrid::defaults());
  REQUIRE(r.certificate);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    CHECK(std::abs(std::remainder(r.certificate->t0_of[k] - std::atan2(dirs[k](1), dirs[k](0)), std::numbers::pi)) < 1e-6);
  }
  CHECK(check_weak(planar, *r.certificate, dirs, ScanGrid::defaults()).pass);

  std::vector<Vector> with_zero = {vec2(0, 0), vec2(1, 0)};
  const WeakResult z = certify_weak(planar, with_zero, ScanGrid::defaults());
  CHECK(z.per_probe[0].excluded);
  CHECK(z.certificate);
}

TEST_CASE("growth functions") {
  const auto g = GrowthFunction::sample([](double t) { return std::exp(t) / 2.0; }, uniform_points(0.0, 0.25, 5.0));
  CHECK(g.value_at(0.3) == doctest::Approx(std::exp(0.25) / 2.0));
  CHECK(g.value_at(0.25) == doctest::Approx(std::exp(0.25) / 2.0));
  const GrowthExponential ge = growth_to_exponential(g);
  // First knot where e^c / 2 > 1 is c = 0.75.
  CHECK(ge.c == doctest::Approx(0.75));
  CHECK(ge.n == doctest::Approx(std::exp(0.75)));
  CHECK(ge.nu == doctest::Approx((0.75 - std::log(2.0)) / 0.75));

  const auto flat = GrowthFunction::sample([](double) { return 1.0; }, uniform_points(0.0, 1.0, 10.0));
  CHECK_THROWS_AS(growth_to_exponential(flat), DivergenceNotObserved);
  CHECK_THROWS_AS(GrowthFunction::sample([](double t) { return 2.0 - t; }, {0.0, 1.0}), InputError);
  CHECK_THROWS_AS(GrowthFunction::sample([](double) { return 1.0; }, {0.5, 1.0}), InputError);
  CHECK_THROWS_AS(g.value_at(-1.0), InputError);

  // Round trip: (N, nu) -> f -> (N', nu') still certifies the same orbits.
  const GrowthFunction f = exponential_to_growth(1.0, 1.0, uniform_points(0.0, 0.5, 20.0));
  const GrowthExponential back = growth_to_exponential(f);
  CHECK(back.nu == doctest::Approx(1.0));
  const std::vector<double> t0_of(kScalarProbes.size(), 0.0);
  CHECK(check_growth(corpus_member("uniform_growth"), f, t0_of, kScalarProbes, small_grid()).pass);
  CHECK_FALSE(check_growth(corpus_member("stable"), f, t0_of, kScalarProbes, small_grid()).pass);
}

TEST_CASE("probe generation") {
  const auto a = random_unit_probes(3, 16, 42);
  const auto b = random_unit_probes(3, 16, 42);
  const auto c = random_unit_probes(3, 16, 43);
  REQUIRE(a.size() == 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].norm() == doctest::Approx(1.0));
    CHECK(a[i] == b[i]);
  }
  CHECK(a[0] != c[0]);

  const auto& planar = corpus_member("planar_rotation");
  const std::vector<double> t0s = {0.0, 0.7, 2.0};
  const auto adv = adversarial_probes(planar, t0s);
  REQUIRE(adv.size() == 3);
  for (std::size_t i = 0; i < t0s.size(); ++i) {
    const Vector d = vec2(-std::sin(t0s[i]), std::cos(t0s[i]));
    CHECK(std::min((adv[i] - d).norm(), (adv[i] + d).norm()) < 1e-12);
  }
  CHECK(adversarial_probes(corpus_member("stable"), t0s).empty());
}

TEST_CASE("scan results do not depend on the worker count") {
  const auto& planar = corpus_member("planar_rotation");
  const auto probes = random_unit_probes(2, 6, 9);
  setenv("EVOSTAB_THREADS", "1", 1);
  const CheckResult one = check_uniform(planar, {2.0, 0.5}, probes, ScanGrid::defaults());
  setenv("EVOSTAB_THREADS", "4", 1);
  const CheckResult four = check_uniform(planar, {2.0, 0.5}, probes, ScanGrid::defaults());
  unsetenv("EVOSTAB_THREADS");
  CHECK(one.pass == four.pass);
  CHECK(one.points == four.points);
  CHECK(one.max_violation == four.max_violation);
  REQUIRE(one.worst);
  REQUIRE(four.worst);
  CHECK(one.worst->probe == four.worst->probe);
  CHECK(one.worst->t0 == four.worst->t0);
}
