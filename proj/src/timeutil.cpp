#include "flexembed/timeutil.hpp"

#include <cstdio>

namespace flexembed {
namespace {

// Howard Hinnant's days_from_civil / civil_from_days.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::optional<UnixSeconds> parse_iso8601(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  CivilTime c;
  if (!read_int(s, 0, 4, c.year) || s.size() < 10 || s[4] != '-' || !read_int(s, 5, 2, c.month) ||
      s[7] != '-' || !read_int(s, 8, 2, c.day)) {
    return std::nullopt;
  }
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31) return std::nullopt;
  std::size_t pos = 10;
  int offset_seconds = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, c.hour) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
        !read_int(s, pos + 3, 2, c.minute)) {
      return std::nullopt;
    }
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
      if (!read_int(s, pos + 1, 2, c.second)) return std::nullopt;
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      }
    }
    if (pos < s.size()) {
      if (s[pos] == 'Z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '+' ? 1 : -1;
        int oh = 0;
        int om = 0;
        if (!read_int(s, pos + 1, 2, oh)) return std::nullopt;
        std::size_t next = pos + 3;
        if (next < s.size() && s[next] == ':') ++next;
        if (next < s.size()) {
          if (!read_int(s, next, 2, om)) return std::nullopt;
          next += 2;
        }
        offset_seconds = sign * (oh * 3600 + om * 60);
        pos = next;
      }
    }
    if (pos != s.size()) return std::nullopt;
    if (c.hour > 23 || c.minute > 59 || c.second > 60) return std::nullopt;
  }
  return from_civil(c) - offset_seconds;
}

UnixSeconds from_civil(const CivilTime& c) {
  const std::int64_t days = days_from_civil(c.year, static_cast<unsigned>(c.month),
                                            static_cast<unsigned>(c.day));
  return days * 86400 + c.hour * 3600 + c.minute * 60 + c.second;
}

CivilTime to_civil(UnixSeconds t) {
  const std::int64_t days = floor_div(t, 86400);
  const std::int64_t rem = t - days * 86400;
  CivilTime c;
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>((rem % 3600) / 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

std::string format_iso8601(UnixSeconds t) {
  const CivilTime c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

int weekday(UnixSeconds t) {
  // 1970-01-01 was a Thursday (index 3).
  const std::int64_t days = floor_div(t, 86400);
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

int hour_of_day(UnixSeconds t) { return to_civil(t).hour; }

int year_of(UnixSeconds t) { return to_civil(t).year; }

}  // namespace flexembed
