#include "evostab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "evostab/errors.hpp"

namespace evostab {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_series_csv(std::ostream& out, const std::string& header, std::span<const double> xs,
                      std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("series columns differ in length");
  out << header << '\n';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << format_number(xs[i]) << ',' << format_number(ys[i]) << '\n';
  }
}

}  // namespace evostab
