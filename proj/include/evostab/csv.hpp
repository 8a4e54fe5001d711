#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace evostab {

/// 17 significant digits; infinities as `inf`/`-inf`.
std::string format_number(double v);

/// Two-column CSV with the given header line (e.g. "t,log_norm").
void write_series_csv(std::ostream& out, const std::string& header, std::span<const double> xs,
                      std::span<const double> ys);

}  // namespace evostab
