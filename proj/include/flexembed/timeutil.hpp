#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flexembed {

/// Seconds since 1970-01-01T00:00:00Z.
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerHour = 3600;

struct CivilTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
};

/// Parses `YYYY-MM-DD[T| ]HH:MM[:SS][Z|±HH:MM]` and plain `YYYY-MM-DD`.
/// Returns nullopt on malformed input; offsets are normalized to UTC.
std::optional<UnixSeconds> parse_iso8601(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(UnixSeconds t);

CivilTime to_civil(UnixSeconds t);
UnixSeconds from_civil(const CivilTime& c);

/// Monday = 0 … Sunday = 6.
int weekday(UnixSeconds t);
int hour_of_day(UnixSeconds t);
int year_of(UnixSeconds t);

}  // namespace flexembed
