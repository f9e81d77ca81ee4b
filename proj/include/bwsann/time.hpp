#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace bwsann {

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (a trailing "Z" or "+00:00" is accepted, as
/// is a bare date). Throws Error(kParseError) on anything else.
Timestamp parse_timestamp(std::string_view text);

std::string format_timestamp(Timestamp ts);

/// Day index (days since epoch, UTC) used for daily exposure accounting.
long day_of(Timestamp ts);

}  // namespace bwsann
