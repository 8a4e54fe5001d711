#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "evostab/commands.hpp"
#include "evostab/config.hpp"
#include "evostab/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Certify or refute exponential instability of evolution operators"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "Run every criterion pipeline on one operator");
  std::optional<std::string> op, config_path, t0_grid, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> p, horizon;
  analyze->add_option("--op", op, "Corpus member name");
  analyze->add_option("--config", config_path, "key = value config file");
  analyze->add_option("--seed", seed, "Probe seed");
  analyze->add_option("--p", p, "Datko exponent (>= 1)");
  analyze->add_option("--horizon", horizon, "Datko and Lyapunov horizon length");
  analyze->add_option("--t0-grid", t0_grid, "start:step:stop or comma list");
  analyze->add_option("--out", out, "Output directory");

  auto* corpus = app.add_subcommand("corpus", "Axiom sweep, corpus analyses and acceptance criteria");
  std::string corpus_out;
  corpus->add_option("--out", corpus_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return evostab::kExitConfig;
  }

  if (*corpus) {
    evostab::CorpusOptions options;
    options.out = corpus_out;
    return evostab::cmd_corpus(options, std::cout, std::cerr);
  }

  evostab::RunConfig cfg;
  try {
    if (config_path) cfg = evostab::load_config(*config_path);
    if (op) {
      cfg.op = *op;
      cfg.kernel_knots.reset();
    }
    if (seed) cfg.seed = *seed;
    if (p) cfg.p = *p;
    if (horizon) cfg.horizon = *horizon;
    if (t0_grid) cfg.t0_grid = evostab::parse_t0_grid(*t0_grid);
    if (out) cfg.out = *out;
  } catch (const evostab::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return evostab::kExitConfig;
  }
  return evostab::cmd_analyze(cfg, std::cout, std::cerr);
}
