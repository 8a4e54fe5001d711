#include "evostab/scan_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evostab/errors.hpp"

namespace evostab {

std::vector<double> uniform_points(double start, double step, double stop) {
  if (!(step > 0.0)) throw InputError("grid step must be positive");
  if (!(stop >= start)) throw InputError("grid end precedes grid start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> out;
  out.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

ScanGrid ScanGrid::defaults() {
  ScanGrid grid;
  grid.t0s = uniform_points(0.0, 0.25, 2.0 * std::numbers::pi);
  return grid;
}

void ScanGrid::validate() const {
  if (t0s.empty()) throw InputError("scan grid has no start times");
  if (!(step > 0.0) || !(s_span >= 0.0) || !(d_span >= 0.0)) {
    throw InputError("scan grid spans must be nonnegative and the step positive");
  }
  for (double t0 : t0s) {
    if (!(t0 >= 0.0) || !std::isfinite(t0)) throw InputError("scan start times must be finite and >= 0");
  }
}

std::vector<double> ScanGrid::sample_times(const EvolutionOperator& op, double t0) const {
  const double stop = std::min(t0 + s_span + d_span, t_max);
  std::vector<double> times;
  if (stop < t0) return times;
  const auto count = static_cast<std::size_t>(std::floor((stop - t0) / step + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) times.push_back(t0 + static_cast<double>(k) * step);
  if (knot_aware) {
    for (double b : op.breakpoints(t0, stop)) times.push_back(b);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }),
                times.end());
  }
  return times;
}

}  // namespace evostab
