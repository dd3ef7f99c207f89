#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace soiverify::timeutil {

using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerDay = 86'400;
inline constexpr UnixSeconds kSecondsPerWeek = 7 * kSecondsPerDay;

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS" with optional trailing "Z".
std::optional<UnixSeconds> parse_iso8601(const std::string& s);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(UnixSeconds t);

/// "YYYY-MM" partition key for the observation store.
std::string month_key(UnixSeconds t);

}  // namespace soiverify::timeutil
