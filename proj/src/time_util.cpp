#include "pipewarden/time_util.hpp"

#include <array>
#include <cstdio>

namespace pipewarden {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool is_leap(std::int64_t y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr std::array<unsigned, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                       31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lengths[m - 1];
}

bool take_digits(std::string_view& s, int count, std::int64_t& out) {
  if (s.size() < static_cast<size_t>(count)) return false;
  std::int64_t v = 0;
  for (int i = 0; i < count; ++i) {
    char c = s[static_cast<size_t>(i)];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  s.remove_prefix(static_cast<size_t>(count));
  out = v;
  return true;
}

bool take_char(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view text) {
  std::int64_t year, month, day;
  if (!take_digits(text, 4, year)) return std::nullopt;
  if (!take_char(text, '-')) return std::nullopt;
  if (!take_digits(text, 2, month)) return std::nullopt;
  if (!take_char(text, '-')) return std::nullopt;
  if (!take_digits(text, 2, day)) return std::nullopt;
  if (month < 1 || month > 12) return std::nullopt;
  if (day < 1 || day > days_in_month(year, static_cast<unsigned>(month)))
    return std::nullopt;

  std::int64_t secs =
      days_from_civil(year, static_cast<unsigned>(month),
                      static_cast<unsigned>(day)) *
      kSecondsPerDay;
  if (text.empty()) return secs;

  if (!(take_char(text, 'T') || take_char(text, 't') || take_char(text, ' ')))
    return std::nullopt;
  std::int64_t hh, mm, ss;
  if (!take_digits(text, 2, hh)) return std::nullopt;
  if (!take_char(text, ':')) return std::nullopt;
  if (!take_digits(text, 2, mm)) return std::nullopt;
  if (!take_char(text, ':')) return std::nullopt;
  if (!take_digits(text, 2, ss)) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  if (ss == 60) ss = 59;  // leap second, clamp
  secs += hh * 3600 + mm * 60 + ss;

  // Fractional seconds are parsed and discarded.
  if (take_char(text, '.')) {
    size_t n = 0;
    while (n < text.size() && text[n] >= '0' && text[n] <= '9') ++n;
    if (n == 0) return std::nullopt;
    text.remove_prefix(n);
  }

  if (text.empty()) return std::nullopt;  // offset is mandatory with a time
  if (take_char(text, 'Z') || take_char(text, 'z')) {
    return text.empty() ? std::optional<Timestamp>(secs) : std::nullopt;
  }
  int sign;
  if (take_char(text, '+')) {
    sign = 1;
  } else if (take_char(text, '-')) {
    sign = -1;
  } else {
    return std::nullopt;
  }
  std::int64_t oh, om;
  if (!take_digits(text, 2, oh)) return std::nullopt;
  take_char(text, ':');
  if (!take_digits(text, 2, om)) return std::nullopt;
  if (!text.empty() || oh > 23 || om > 59) return std::nullopt;
  return secs - sign * (oh * 3600 + om * 60);
}

std::string format_rfc3339(Timestamp t) {
  std::int64_t days = t / kSecondsPerDay;
  std::int64_t rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    days -= 1;
  }
  std::int64_t year;
  unsigned month, day;
  civil_from_days(days, year, month, day);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                static_cast<long long>(year), month, day,
                static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

std::int64_t days_between(Timestamp earlier, Timestamp later) {
  std::int64_t diff = later - earlier;
  if (diff >= 0) return diff / kSecondsPerDay;
  return -((-diff + kSecondsPerDay - 1) / kSecondsPerDay);
}

}  // namespace pipewarden
