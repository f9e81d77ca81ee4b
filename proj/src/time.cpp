#include "bwsann/time.hpp"

#include <cstdio>
#include <ctime>

#include "bwsann/error.hpp"
#include "bwsann/rng.hpp"

namespace bwsann {

std::uint64_t hash_string(std::string_view s) noexcept {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

Timestamp parse_timestamp(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const std::string buf(text);
  int consumed = 0;
  if (std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &consumed) == 6) {
    const std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
    if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
      throw Error(Errc::kParseError, buf, "only UTC timestamps are supported");
    }
  } else if (std::sscanf(buf.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) == 3 &&
             static_cast<std::size_t>(consumed) == text.size()) {
    h = mi = s = 0;
  } else {
    throw Error(Errc::kParseError, buf, "expected YYYY-MM-DDTHH:MM:SSZ");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw Error(Errc::kParseError, buf, "out-of-range field");
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} + std::chrono::seconds{s};
}

std::string format_timestamp(Timestamp ts) {
  const auto days = std::chrono::floor<std::chrono::days>(ts);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{ts - days};
  char out[64];
  std::snprintf(out, sizeof(out), "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return out;
}

long day_of(Timestamp ts) {
  return static_cast<long>(std::chrono::floor<std::chrono::days>(ts).time_since_epoch().count());
}

}  // namespace bwsann
