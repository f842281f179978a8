#pragma once

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace flexembed::csv {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// A parsed CSV file: header plus rows of raw fields. Lines starting with
/// '#' are treated as comments and skipped. `line_numbers[i]` is the 1-based
/// line number of data row i in the source file.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;

  /// Index of a header column, or -1.
  long column(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line, char sep = ',');
Table read(const std::filesystem::path& path);
Table parse(std::istream& in, const std::string& source);

/// Empty, "NA", "NaN", "null" → missing; otherwise strict numeric parse.
/// Returns false if the field is neither missing nor a number.
bool parse_number(std::string_view field, double& out);

/// Shortest text that round-trips the double exactly ("NA" for missing).
std::string format_number(double v);

}  // namespace flexembed::csv
