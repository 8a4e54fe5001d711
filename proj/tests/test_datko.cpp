#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evostab/acceptance.hpp"
#include "evostab/certify.hpp"
#include "evostab/datko.hpp"
#include "evostab/errors.hpp"
#include "support.hpp"

using namespace evostab;
using testing::scalar;

TEST_CASE("ratio series against closed forms") {
  const auto times = horizon_times(0.0, 5.0, 0.25);
  const RatioScan g = datko_ratio_scan(corpus_member("uniform_growth"), scalar(1.0), 0.0, 1.0, times);
  CHECK(g.log_ratio.front() == -std::numeric_limits<double>::infinity());
  CHECK(std::exp(g.log_ratio.back()) == doctest::Approx(-std::expm1(-5.0)).epsilon(1e-10));
  CHECK(std::exp(g.log_k_measured) < 1.0);
  CHECK(g.t_at_max == 5.0);

  const RatioScan s = datko_ratio_scan(corpus_member("stable"), scalar(2.0), 0.0, 1.0, times);
  CHECK(std::exp(s.log_ratio.back()) == doctest::Approx(std::expm1(5.0)).epsilon(1e-10));

  std::ostringstream csv;
  write_ratio_csv(csv, g);
  CHECK(csv.str().rfind("t,log_ratio\n0,-inf\n", 0) == 0);
  CHECK_THROWS_AS(datko_ratio_scan(corpus_member("stable"), scalar(0.0), 0.0, 1.0, times), InputError);
  CHECK_THROWS_AS(datko_ratio_scan(corpus_member("stable"), scalar(1.0), 0.5, 1.0, times), InputError);
}

TEST_CASE("necessity constant is approached from below") {
  const auto& op = corpus_member("uniform_growth");
  double prev = 0.0;
  for (double h : {2.0, 5.0, 10.0, 20.0}) {
    const auto times = horizon_times(0.0, h, 0.5);
    const double k = std::exp(datko_ratio_scan(op, scalar(1.0), 0.0, 1.0, times).log_k_measured);
    CHECK(k > prev);
    CHECK(k <= necessity_constant(1.0, 1.0, 1.0));
    prev = k;
  }
}

TEST_CASE("planar rotation is bounded at p = 2") {
  const auto& op = corpus_member("planar_rotation");
  const auto dirs = planar_directions(16);
  const WeakResult weak = certify_weak(op, dirs, ScanGrid::defaults());
  REQUIRE(weak.certificate);
  DatkoOptions o;
  o.p = 2.0;
  o.k_ceiling = necessity_constant(1.0, 1.0, 2.0);
  o.t0_hints = weak.certificate->t0_of;
  const DatkoReport r = datko_verdict(op, dirs, o);
  CHECK(r.verdict == DatkoVerdict::bounded);
  CHECK(std::exp(r.log_k_measured) <= 0.5 + 1e-6);
  CHECK(r.t0_of.size() == dirs.size());
}

TEST_CASE("stable kernel shows an unbounded trend") {
  DatkoOptions o;
  o.k_ceiling = 1.0;
  const std::vector<Vector> probes = {scalar(1.0)};
  const DatkoReport r = datko_verdict(corpus_member("stable"), probes, o);
  CHECK(r.verdict == DatkoVerdict::unbounded_trend);
  // Best start time cannot help: the ratio is e^{H} - 1 from any t0.
  CHECK(r.log_k_measured == doctest::Approx(std::log(std::expm1(20.0))).epsilon(1e-9));
  REQUIRE(r.worst_probe);

  o.horizon = 0.0;
  const DatkoReport d = datko_verdict(corpus_member("stable"), probes, o);
  CHECK(d.degenerate_horizon);
  CHECK(d.per_probe[0].degenerate);
  CHECK(d.verdict == DatkoVerdict::bounded);

  CHECK_THROWS_AS(datko_verdict(corpus_member("stable"), std::vector<Vector>{}, o), InputError);
}

TEST_CASE("sufficiency constants") {
  CHECK(sufficiency_constants(1, 1, 1, 1).l == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(sufficiency_constants(0.5, 2, 1, 1).l == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  // Small K makes the first branch large; large M drives both to zero.
  CHECK(sufficiency_constants(1, 1, 1e6, 1).l < 1e-6);
  const auto sc = sufficiency_constants(0.5, 2, 1, 1);
  const auto f = sc.growth_function(uniform_points(0.0, 0.5, 100.0));
  for (std::size_t i = 1; i < f.values.size(); ++i) CHECK(f.values[i] >= f.values[i - 1]);
  CHECK(f.values.back() > 1.0);
  CHECK(sc.growth(0.0) == doctest::Approx(std::sqrt(sc.l) / (1.0 + std::sqrt(0.5))));
  CHECK_THROWS_AS(sufficiency_constants(0, 1, 1, 1), InputError);
  CHECK_THROWS_AS(sufficiency_constants(1, 0.5, 1, 1), InputError);
  CHECK_THROWS_AS(sufficiency_constants(1, 1, 0.5, 1), InputError);
  CHECK_THROWS_AS(sufficiency_constants(1, 1, 1, 0), InputError);
}

TEST_CASE("discrete sums") {
  const auto& op = corpus_member("uniform_growth");
  const double ratio = std::exp(discrete_sum_scan(op, scalar(1.0), 0.0, 1.0, 3.0) - 3.0);
  CHECK(ratio == doctest::Approx(1.0 + std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0)).epsilon(1e-14));
  CHECK(discrete_sum_scan(op, scalar(2.0), 1.0, 3.0, 1.0) == doctest::Approx(3.0 * std::log(2.0)));
  // floor(t - t0) terms: t = 3.9 still sums four terms.
  CHECK(std::exp(discrete_sum_scan(op, scalar(1.0), 0.0, 1.0, 3.9) - 3.9) == doctest::Approx(ratio));
  CHECK_THROWS_AS(discrete_sum_scan(op, scalar(1.0), 2.0, 1.0, 1.0), OrderingError);

  const double ceiling = discrete_necessity_constant(1.0, 1.0, 1.0);
  CHECK(ceiling == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))));
  const auto ratios = discrete_log_ratios(op, scalar(1.0), 0.0, 1.0, horizon_times(0.0, 30.0, 0.5));
  for (double r : ratios) CHECK(std::exp(r) <= ceiling + 1e-9);
}

TEST_CASE("discrete to integral constant") {
  CHECK(discrete_to_integral_bound(2, 1, 1, 1) == doctest::Approx(2.0 * std::exp(1.0)));
  CHECK(discrete_to_integral_bound(3, 1, 1e-12, 2) == doctest::Approx(3.0));
  CHECK_THROWS_AS(discrete_to_integral_bound(3, 1, 0.0, 2), InputError);
  CHECK(discrete_to_integral_bound(1.0 / -std::expm1(-1.0), 1, 1, 1) ==
        doctest::Approx(std::exp(1.0) / -std::expm1(-1.0)));
  CHECK(log_discrete_to_integral_bound(0.0, 2.0, 500.0, 2.0) == doctest::Approx(1004.0));
  CHECK(necessity_constant(1, 1, 2) == 0.5);
}
