#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pipewarden {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// Parses an RFC 3339 timestamp ("2021-03-01T12:00:00Z", offsets allowed) or a
// bare date ("2021-03-01", midnight UTC). Returns nullopt on anything else.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp t);

// Whole days elapsed from `earlier` to `later`, floored. Negative if
// `later` precedes `earlier`.
std::int64_t days_between(Timestamp earlier, Timestamp later);

}  // namespace pipewarden
