#include "evostab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "evostab/errors.hpp"

namespace evostab {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::string_view key) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
    throw ConfigError("invalid number for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view key) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("invalid integer for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}

std::vector<LogProfile::Knot> parse_knots(std::string_view text) {
  std::vector<LogProfile::Knot> knots;
  for (auto item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw ConfigError("kernel knot must be t:value, got '" + std::string(item) + "'");
    knots.push_back({parse_double(parts[0], "kernel.knots"), parse_double(parts[1], "kernel.knots")});
  }
  return knots;
}

}  // namespace

std::vector<double> parse_t0_grid(std::string_view text) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("t0 grid range must be start:step:stop");
    const double start = parse_double(parts[0], "t0_grid");
    const double step = parse_double(parts[1], "t0_grid");
    const double stop = parse_double(parts[2], "t0_grid");
    if (!(step > 0.0) || stop < start) throw ConfigError("t0 grid range needs step > 0 and stop >= start");
    if ((stop - start) / step > 1e5) throw ConfigError("t0 grid range is too long");
    return uniform_points(start, step, stop);
  }
  std::vector<double> out;
  for (auto item : split(text, ',')) out.push_back(parse_double(item, "t0_grid"));
  return out;
}

bool RunConfig::wants(const std::string& criterion) const {
  return std::find(criteria.begin(), criteria.end(), criterion) != criteria.end();
}

void RunConfig::validate() const {
  if (op.empty() == !kernel_knots.has_value()) {
    throw ConfigError("config needs exactly one of op or kernel.knots");
  }
  if (dimension == 0) throw ConfigError("dimension must be positive");
  if (probes == 0) throw ConfigError("probes must be positive");
  if (probes > 4096) throw ConfigError("probes must be at most 4096");
  if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
  if (!(horizon >= 0.0) || horizon > 1e4) throw ConfigError("horizon must be in [0, 1e4]");
  if (!(step > 0.0)) throw ConfigError("step must be positive");
  if (out.empty()) throw ConfigError("out must name a directory");
  for (const auto& c : criteria) {
    if (std::find(kAllCriteria.begin(), kAllCriteria.end(), c) == kAllCriteria.end()) {
      throw ConfigError("unknown criterion '" + c + "'");
    }
  }
  if (t0_grid) {
    if (t0_grid->empty()) throw ConfigError("t0 grid is empty");
    for (double t : *t0_grid) {
      if (!(t >= 0.0)) throw ConfigError("t0 grid values must be >= 0");
    }
  }
  try {
    scan_grid().validate();
    (void)build_operator();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

ScanGrid RunConfig::scan_grid() const {
  ScanGrid grid = ScanGrid::defaults();
  if (t0_grid) {
    grid.t0s = *t0_grid;
    std::sort(grid.t0s.begin(), grid.t0s.end());
    grid.t0s.erase(std::unique(grid.t0s.begin(), grid.t0s.end()), grid.t0s.end());
  }
  grid.step = step;
  return grid;
}

EvolutionOperator RunConfig::build_operator() const {
  if (!op.empty()) {
    try {
      return corpus_member(op);
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    auto profile = LogProfile::from_knots(*kernel_knots);
    return EvolutionOperator("kernel", dimension, profile_kernel(std::move(profile), kernel_rate));
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid kernel: ") + e.what());
  }
}

std::string RunConfig::operator_label() const { return op.empty() ? "kernel" : op; }

RunConfig parse_config(std::string_view text, RunConfig base) {
  RunConfig cfg = std::move(base);
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "op") {
      cfg.op = std::string(value);
    } else if (key == "kernel.knots") {
      cfg.kernel_knots = parse_knots(value);
    } else if (key == "kernel.rate") {
      cfg.kernel_rate = parse_double(value, key);
    } else if (key == "dimension") {
      cfg.dimension = parse_unsigned(value, key);
    } else if (key == "probes") {
      cfg.probes = parse_unsigned(value, key);
    } else if (key == "seed") {
      cfg.seed = parse_unsigned(value, key);
    } else if (key == "p") {
      cfg.p = parse_double(value, key);
    } else if (key == "horizon") {
      cfg.horizon = parse_double(value, key);
    } else if (key == "t0_grid") {
      cfg.t0_grid = parse_t0_grid(value);
    } else if (key == "step") {
      cfg.step = parse_double(value, key);
    } else if (key == "criteria") {
      cfg.criteria.clear();
      for (auto c : split(value, ',')) cfg.criteria.emplace_back(c);
    } else if (key == "out") {
      cfg.out = std::string(value);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

}  // namespace evostab
