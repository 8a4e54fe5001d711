#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evostab/operators.hpp"
#include "evostab/scan_grid.hpp"

namespace evostab {

/// One scanned point of a definitional inequality, in log form.
/// log_violation = ln(RHS) - ln(LHS); positive means the inequality fails.
struct Witness {
  double t0 = 0.0;
  double s = 0.0;
  double t = 0.0;
  std::size_t probe = 0;
  double log_violation = -std::numeric_limits<double>::infinity();
};

struct CheckResult {
  bool pass = true;
  /// Largest log_violation over the grid (negative: slack everywhere).
  double max_violation = -std::numeric_limits<double>::infinity();
  /// Point attaining max_violation; ties go to the lexicographically
  /// smallest (t0, s, t, probe).
  std::optional<Witness> worst;
  std::size_t points = 0;
};

/// A point counts as violated when its log_violation exceeds
/// log_tol * max(1, |ln LHS|, |ln RHS|).
inline constexpr double kDefaultLogTol = 1e-12;

struct DecayCertificate {
  double log_m = 0.0;
  double omega = 1.0;
  double m() const;
};

struct UniformCertificate {
  double n = 1.0;
  double nu = 1.0;
};

struct NonuniformCertificate {
  std::function<double(double)> log_n;
  double nu = 1.0;
  std::string description;
};

struct BVCertificate {
  double n = 1.0;
  double alpha = 0.0;
  double nu = 1.0;
};

struct WeakCertificate {
  double n = 1.0;
  double nu = 1.0;
  /// Start time t0(x0) per probe index.
  std::vector<double> t0_of;
};

/// Nondecreasing positive function sampled on knots starting at 0. Between
/// knots it is read as the lower step, which is again nondecreasing and
/// bounded above by any nondecreasing interpolant.
struct GrowthFunction {
  std::vector<double> knots;
  std::vector<double> values;
  /// Largest time searched for f > 1.
  double divergence_bound = std::numeric_limits<double>::infinity();

  static GrowthFunction sample(const std::function<double(double)>& f, std::vector<double> knots,
                               double divergence_bound = std::numeric_limits<double>::infinity());
  void validate() const;
  double value_at(double tau) const;
};

// ---- exponential decay ---------------------------------------------------------

struct DecayFitOptions {
  double omega_max = 10.0;
  double log_m_max = 10.0;
  /// Rate reported when every orbit is non-decreasing.
  double min_rate = 1e-6;
};

struct DecayFit {
  std::optional<DecayCertificate> certificate;
  /// Present when no (M, omega) within the caps fits the grid.
  std::optional<Witness> refutation;
  /// Largest observed drop rate -ln(||U(t,t0)x0|| / ||x0||) / (t - t0).
  double required_rate = 0.0;
};

DecayFit fit_decay(const EvolutionOperator& op, std::span<const Vector> probes,
                   const ScanGrid& grid, const DecayFitOptions& options = {});

CheckResult check_decay(const EvolutionOperator& op, const DecayCertificate& cert,
                        std::span<const Vector> probes, const ScanGrid& grid,
                        double log_tol = kDefaultLogTol);

// ---- uniform / nonuniform / Barreira-Valls -------------------------------------

/// Three-time form N ||U(t,t0)x0|| >= e^{nu(t-s)} ||U(s,t0)x0||.
CheckResult check_uniform(const EvolutionOperator& op, const UniformCertificate& cert,
                          std::span<const Vector> probes, const ScanGrid& grid,
                          double log_tol = kDefaultLogTol);

/// N(t) ||U(t,t0)x0|| >= e^{nu(t-t0)} ||x0||.
CheckResult check_nonuniform(const EvolutionOperator& op, const NonuniformCertificate& cert,
                             std::span<const Vector> probes, const ScanGrid& grid,
                             double log_tol = kDefaultLogTol);

struct BvWitness {
  double t = 0.0;
  double t0 = 0.0;
  /// Index n of the (n + 1/n, n) family, 0 for a general grid point.
  int n = 0;
  std::size_t probe = 0;
  /// ln(RHS) - ln(LHS) > 0.
  double deficit = 0.0;
};

/// Searches (t, t0) = (n + 1/n, n), n = 2..bound, then the general grid, for a
/// violation of N e^{alpha t} ||U(t,t0)x0|| >= e^{nu(t-t0)} ||x0||. Empty
/// probes means the standard basis. nullopt is not a proof of instability.
std::optional<BvWitness> refute_bv(const EvolutionOperator& op, const BVCertificate& candidate,
                                   int bound, std::span<const Vector> probes = {},
                                   const ScanGrid& grid = ScanGrid::defaults(),
                                   double log_tol = kDefaultLogTol);

// ---- weak instability ------------------------------------------------------------

struct WeakSearchOptions {
  double n_max = 22026.465794806718;  // e^10
  double nu_min = 0.05;
  /// Refine the best grid start time per probe with a bracketed Brent search.
  bool refine_t0 = true;
};

struct WeakProbeResult {
  double t0 = 0.0;
  double n = 1.0;
  double nu = 0.0;
  bool feasible = false;
  bool excluded = false;
};

struct WeakResult {
  std::optional<WeakCertificate> certificate;
  std::vector<WeakProbeResult> per_probe;
};

/// For every probe, scans grid.t0s for the start time with the tightest
/// (N, nu) over the pair grid and combines them into one certificate.
WeakResult certify_weak(const EvolutionOperator& op, std::span<const Vector> probes,
                        const ScanGrid& grid, const WeakSearchOptions& options = {});

/// N ||U(t,t0)x0|| >= e^{nu(t-s)} ||U(s,t0)x0|| for t >= s >= t0(x0).
CheckResult check_weak(const EvolutionOperator& op, const WeakCertificate& cert,
                       std::span<const Vector> probes, const ScanGrid& grid,
                       double log_tol = kDefaultLogTol);

/// ||U(t,t0)x0|| >= f(t-s) ||U(s,t0)x0|| for t >= s >= t0(x0).
CheckResult check_growth(const EvolutionOperator& op, const GrowthFunction& f,
                         std::span<const double> t0_of, std::span<const Vector> probes,
                         const ScanGrid& grid, double log_tol = kDefaultLogTol);

// ---- growth function conversions ---------------------------------------------------

struct GrowthExponential {
  double n = 1.0;
  double nu = 0.0;
  double c = 0.0;
};

/// First c in c_search (or in f's knots when empty) with f(c) > 1 gives
/// nu = ln f(c) / c and N = f(c) / f(0).
GrowthExponential growth_to_exponential(const GrowthFunction& f,
                                        std::span<const double> c_search = {});

/// Samples f(t) = e^{nu t} / N.
GrowthFunction exponential_to_growth(double n, double nu, std::vector<double> knots);

// ---- probes ------------------------------------------------------------------------

/// Unit vectors drawn uniformly from the sphere with a seeded generator.
std::vector<Vector> random_unit_probes(std::size_t dimension, std::size_t count, std::uint64_t seed);

/// For each t0, the unit input direction most contracted by U(t0 + window, t0)
/// (smallest right singular vector). Empty for one-dimensional operators.
std::vector<Vector> adversarial_probes(const EvolutionOperator& op, std::span<const double> t0s,
                                       double window = 1.0);

}  // namespace evostab
