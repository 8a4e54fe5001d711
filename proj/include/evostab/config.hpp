#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evostab/operators.hpp"
#include "evostab/scan_grid.hpp"

namespace evostab {

/// Sections produced by `analyze`, in report order.
inline const std::vector<std::string> kAllCriteria = {"decay", "uniform", "weak", "bv", "datko", "lyapunov"};

struct RunConfig {
  /// Corpus member name; empty when a kernel is given instead.
  std::string op;
  /// ScalarKernel log-profile knots, `kernel.knots = t:v, t:v, ...`.
  std::optional<std::vector<LogProfile::Knot>> kernel_knots;
  double kernel_rate = 1.0;
  std::size_t dimension = 1;

  std::size_t probes = 8;
  std::uint64_t seed = 1;
  double p = 1.0;
  double horizon = 20.0;
  std::optional<std::vector<double>> t0_grid;
  double step = 0.5;
  std::vector<std::string> criteria = kAllCriteria;
  std::string out = "evostab-out";

  bool wants(const std::string& criterion) const;
  /// Throws ConfigError on any out-of-domain field.
  void validate() const;
  ScanGrid scan_grid() const;
  /// Corpus member or kernel operator named by the config.
  EvolutionOperator build_operator() const;
  std::string operator_label() const;
};

/// Applies `key = value` lines (with `#` comments) on top of `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// `start:step:stop` or a comma-separated list.
std::vector<double> parse_t0_grid(std::string_view text);

}  // namespace evostab
