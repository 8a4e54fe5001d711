// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ids...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "evostab/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) {
    for (int id = 1; id <= evostab::kCriterionCount; ++id) ids.push_back(id);
  }
  int failed = 0;
  for (int id : ids) {
    const auto start = std::chrono::steady_clock::now();
    const evostab::CriterionResult r = evostab::run_criterion(id);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s [%.2f s]\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(), r.detail.c_str(), secs);
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(ids.size()) - failed, ids.size());
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
