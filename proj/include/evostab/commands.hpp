#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evostab/config.hpp"
#include "evostab/operators.hpp"
#include "evostab/report.hpp"

namespace evostab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAccuracy = 3;

/// Builds the analysis report for an operator without touching the disk.
/// CSV series are collected as (file name, contents) pairs.
struct Analysis {
  Json report;
  std::vector<std::pair<std::string, std::string>> series;
  int exit_code = kExitOk;
};

Analysis analyze(const EvolutionOperator& op, const RunConfig& config);

/// Validates the config, runs the pipeline and writes report.json plus CSVs
/// into config.out. Exit 0 on completion, 2 on config errors (nothing
/// written), 3 on accuracy or integration errors (partial report).
int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);

struct CorpusOptions {
  std::string out;
  std::uint64_t seed = 7;
  /// Extra operators swept for the axioms and analysed with the corpus.
  std::vector<NamedOperator> extra;
  /// Run the acceptance criteria in addition to the axiom sweep and analyses.
  bool criteria = true;
};

/// Axiom sweep, per-member analysis into out/<name>/, acceptance criteria
/// 1 to 9, summary table on `out` and summary.json. Exit 0 iff all pass.
int cmd_corpus(const CorpusOptions& options, std::ostream& out, std::ostream& err);

}  // namespace evostab
