#include "flexembed/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "flexembed/error.hpp"

namespace flexembed::csv {

long Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<long>(i);
  }
  return -1;
}

std::vector<std::string> split_line(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  for (auto& f : out) {
    const auto b = f.find_first_not_of(' ');
    const auto e = f.find_last_not_of(' ');
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

Table parse(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  long lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    auto fields = split_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw LoadError(source + ": expected " + std::to_string(t.header.size()) + " fields, got " +
                          std::to_string(fields.size()),
                      lineno);
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw LoadError(source + ": empty file");
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  return parse(in, path.string());
}

bool parse_number(std::string_view f, double& out) {
  if (f.empty() || f == "NA" || f == "NaN" || f == "nan" || f == "null" || f == "NULL") {
    out = kMissing;
    return true;
  }
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  const auto* end = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(f.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "NA";
  return std::string(buf, ptr);
}

}  // namespace flexembed::csv
