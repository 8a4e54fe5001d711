#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "evostab/certify.hpp"
#include "evostab/datko.hpp"
#include "evostab/lyapunov.hpp"
#include "evostab/scan_grid.hpp"

namespace evostab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Finite values as JSON numbers; infinities and NaN as "inf", "-inf", "nan".
Json number(double v);
Json vector_json(const Vector& v);
Json numbers_json(std::span<const double> xs);

/// {kind, parameters, grid, verdict, witnesses}.
Json section(const std::string& kind, Json parameters, Json grid, const std::string& verdict,
             Json witnesses);

Json grid_json(const ScanGrid& grid);
Json witness_json(const Witness& w);
Json check_json(const CheckResult& r);
Json bv_witness_json(const BvWitness& w);
Json datko_json(const DatkoReport& r);
Json equation_json(const EquationReport& r);
Json bound_json(const BoundReport& r);

/// Two-space indentation and a trailing newline.
std::string dump(const Json& j);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace evostab
