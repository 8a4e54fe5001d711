#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "evostab/operators.hpp"

namespace testing {

inline evostab::Vector scalar(double v) { return evostab::Vector::Constant(1, v); }

inline evostab::Vector vec2(double a, double b) {
  evostab::Vector v(2);
  v << a, b;
  return v;
}

/// Seeded draws for the hand-rolled property tests.
class Gen {
 public:
  explicit Gen(unsigned seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  evostab::Vector vector(std::size_t dim) {
    evostab::Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(-2.0, 2.0);
    return v;
  }
  /// Sorted triple r <= s <= t within [lo, hi].
  std::vector<double> triple(double lo, double hi) {
    std::vector<double> v = {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)};
    std::sort(v.begin(), v.end());
    return v;
  }

 private:
  std::mt19937 rng_;
};

}  // namespace testing
