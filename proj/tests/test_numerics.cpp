#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evostab/errors.hpp"
#include "evostab/numerics.hpp"
#include "support.hpp"

using namespace evostab;
using testing::scalar;

TEST_CASE("integral of e^{tau} matches the antiderivative") {
  const auto& op = corpus_member("uniform_growth");
  const auto grid = knot_aware_grid(op, 0.0, 20.0);
  const CumulativeTable t = log_integral_power(op, 0.0, scalar(1.0), 1.0, grid);
  CHECK(t.cumlog.front() == -std::numeric_limits<double>::infinity());
  for (std::size_t i = 1; i < t.knots.size(); i += 37) {
    CHECK(t.cumlog[i] == doctest::Approx(std::log(std::expm1(t.knots[i]))).epsilon(1e-11));
  }
  CHECK(t.quad_error > 0.0);
  CHECK(t.quad_error < 1e-8);
}

TEST_CASE("p = 2 on the stable kernel") {
  const auto& op = corpus_member("stable");
  const auto grid = knot_aware_grid(op, 1.0, 6.0);
  const CumulativeTable t = log_integral_power(op, 1.0, scalar(2.0), 2.0, grid);
  // int_1^6 (2 e^{-(tau-1)})^2 = 2 (1 - e^{-10}).
  const double exact = 2.0 * -std::expm1(-10.0);
  const double rel = std::abs(std::exp(t.cumlog.back()) - exact) / exact;
  INFO("relative error ", rel, ", estimate ", t.quad_error);
  CHECK(std::abs(std::exp(t.cumlog.back()) - exact) <= exact * t.quad_error + 1e-14);
}

TEST_CASE("integral from a later start") {
  const auto& op = corpus_member("uniform_growth");
  const auto grid = make_grid(2.0, 3.0, kDefaultPanelWidth);
  const CumulativeTable t = log_integral_power_from(op, 0.0, scalar(1.0), 1.0, grid);
  CHECK(std::exp(t.cumlog.back()) == doctest::Approx(std::exp(3.0) - std::exp(2.0)).epsilon(1e-11));
  CHECK_THROWS_AS(log_integral_power(op, 0.0, scalar(1.0), 1.0, grid), InputError);
}

TEST_CASE("fixed panels converge at fourth order") {
  const EvolutionOperator op("fast", 1, exponential_kernel(3.0));
  QuadratureOptions fixed;
  fixed.max_refine_depth = 0;
  const double exact = std::log(std::expm1(6.0) / 3.0);
  double prev = 0.0;
  for (double h : {0.5, 0.25, 0.125}) {
    const auto grid = make_grid(0.0, 2.0, h);
    const double err = std::abs(std::expm1(log_integral_power(op, 0.0, scalar(1.0), 1.0, grid, fixed).cumlog.back() - exact));
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(16.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("cumulative integrals are nondecreasing and finite") {
  testing::Gen gen(5);
  for (const auto& m : corpus()) {
    for (int i = 0; i < 3; ++i) {
      const double t0 = gen.uniform(0.0, 4.0);
      const auto grid = knot_aware_grid(m.op, t0, t0 + 12.0, 0.125);
      const double p = gen.uniform(1.0, 3.0);
      const CumulativeTable t = log_integral_power(m.op, t0, gen.vector(m.op.dimension()), p, grid);
      for (std::size_t k = 1; k < t.cumlog.size(); ++k) {
        CHECK(std::isfinite(t.cumlog[k]));
        CHECK(t.cumlog[k] >= t.cumlog[k - 1]);
      }
    }
  }
}

TEST_CASE("spike kernel integrates to t = 50 in log space") {
  const auto& op = corpus_member("nonuniform_spikes");
  const auto grid = knot_aware_grid(op, 0.0, 50.0);
  const CumulativeTable t = log_integral_power(op, 0.0, scalar(1.0), 1.0, grid);
  for (double c : t.cumlog) CHECK(!std::isnan(c));
  for (double o : t.orbit_log) CHECK(std::isfinite(o));
  // Exact sum over the linear pieces of the log-integrand.
  CHECK(t.cumlog.back() == doctest::Approx(42.686613110447975).epsilon(1e-9));
}

TEST_CASE("quadrature errors") {
  const auto& op = corpus_member("uniform_growth");
  const auto grid = make_grid(0.0, 1.0, 0.25);
  CHECK_THROWS_AS(log_integral_power(op, 0.0, scalar(1.0), 0.5, grid), InputError);
  CHECK_THROWS_AS(log_integral_power(op, 0.0, scalar(1.0), 1.0, std::vector<double>{}), InputError);
  CHECK_THROWS_AS(log_integral_power(op, 0.0, scalar(1.0), 1.0, std::vector<double>{0.0, 0.5, 0.3}), InputError);
  QuadratureOptions strict;
  strict.error_ceiling = 0.0;
  CHECK_THROWS_AS(log_integral_power(op, 0.0, scalar(1.0), 1.0, grid, strict), AccuracyError);
}

TEST_CASE("grids keep endpoints and breakpoints") {
  const double bps[] = {0.3, 2.0, 7.0};
  const auto g = make_grid(0.0, 1.0, 0.25, bps);
  CHECK(g == std::vector<double>{0.0, 0.25, 0.3, 0.5, 0.75, 1.0});
  CHECK(make_grid(2.0, 2.0, 0.1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), InputError);
  const auto k = knot_aware_grid(corpus_member("nonuniform_spikes"), 2.0, 3.0, 0.25);
  CHECK(std::find(k.begin(), k.end(), 2.5) != k.end());
}

TEST_CASE("log-slope fits") {
  std::vector<std::pair<double, double>> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 2.0 - 0.5 * i);
  const LineFit f = fit_log_slope(line);
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(f.intercept == doctest::Approx(2.0));
  CHECK(f.residual == doctest::Approx(0.0).epsilon(1e-12));

  const LineFit two = fit_log_slope(std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, -1.0}});
  CHECK(two.slope == doctest::Approx(-1.0));
  CHECK(two.intercept == doctest::Approx(0.0));

  // Rising edge of the first spike: ln u climbs with slope 8, the orbit falls at 1 - 8.
  const auto& op = corpus_member("nonuniform_spikes");
  {
    std::vector<std::pair<double, double>> rise;
    for (int i = 0; i <= 10; ++i) {
      const double t = 2.0 + 0.05 * i;
      rise.emplace_back(t, orbit_log_norm(op, t, 2.0, scalar(1.0)).log_value());
    }
    const LineFit r = fit_log_slope(rise);
    CHECK(r.slope == doctest::Approx(-7.0));
    CHECK(r.residual < 1e-12);
  }

  // Across a full spike the orbit is not a line.
  std::vector<std::pair<double, double>> pts;
  const auto times = knot_aware_grid(op, 2.0, 3.0, 0.05);
  const auto logs = orbit_log_norms(op, 2.0, scalar(1.0), times);
  for (std::size_t i = 0; i < times.size(); ++i) pts.emplace_back(times[i], logs[i]);
  CHECK(fit_log_slope(pts).residual > 0.1);

  CHECK_THROWS_AS(fit_log_slope(std::vector<std::pair<double, double>>{{1.0, 1.0}}), InputError);
}

TEST_CASE("cumulative CSV") {
  const auto& op = corpus_member("stable");
  const CumulativeTable t = log_integral_power(op, 0.0, scalar(1.0), 1.0, make_grid(0.0, 1.0, 0.5));
  std::ostringstream out;
  write_cumulative_csv(out, t);
  CHECK(out.str().rfind("t,cum_log_integral\n0,-inf\n0.5,", 0) == 0);
}
