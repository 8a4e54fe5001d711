#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evostab/operators.hpp"

namespace evostab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
};

struct AcceptanceOptions {
  std::uint64_t seed = 7;
  /// Scratch space for the full corpus run of criterion 10.
  std::filesystem::path scratch = std::filesystem::temp_directory_path() / "evostab-acceptance";
};

inline constexpr int kCriterionCount = 10;

std::string criterion_title(int id);

/// Runs one acceptance criterion (1 to 10) against independent oracles.
CriterionResult run_criterion(int id, const AcceptanceOptions& options = {});

/// `count` unit vectors at angles 2 pi k / count.
std::vector<Vector> planar_directions(std::size_t count);

}  // namespace evostab
