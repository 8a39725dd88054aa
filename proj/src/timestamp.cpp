#include "ux/timestamp.hpp"

#include <cstdio>

#include "ux/errors.hpp"

namespace ux {
namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static const int d[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return d[m - 1];
}

// Days since 1970-01-01 (Howard Hinnant's civil-date algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const int yoe = static_cast<int>(y - era * 400);
  const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const int doe = static_cast<int>(z - era * 146097);
  const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

void Timestamp::validate() const {
  if (month < 1 || month > 12) throw CalendarError("month out of range: " + std::to_string(month));
  if (day < 1 || day > days_in_month(year, month))
    throw CalendarError("day out of range: " + std::to_string(day));
  if (hour < 0 || hour > 23) throw CalendarError("hour out of range: " + std::to_string(hour));
  if (minute < 0 || minute > 59 || second < 0 || second > 59)
    throw CalendarError("minute/second out of range");
}

Timestamp Timestamp::parse(const std::string& iso) {
  Timestamp t;
  char tz = 'Z';
  int n = std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%d%c", &t.year, &t.month, &t.day, &t.hour,
                      &t.minute, &t.second, &tz);
  if (n < 6) {
    // Date-only and hour-resolution forms are accepted for convenience.
    t = Timestamp{};
    n = std::sscanf(iso.c_str(), "%d-%d-%dT%d", &t.year, &t.month, &t.day, &t.hour);
    if (n == 3) t.hour = 0;
    if (n < 3) throw CalendarError("unparseable timestamp: " + iso);
  }
  t.validate();
  return t;
}

std::string Timestamp::iso8601() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", year, month, day, hour, minute,
                second);
  return buf;
}

Timestamp Timestamp::plus_hours(std::int64_t hours) const {
  std::int64_t total = days_from_civil(year, month, day) * 24 + hour + hours;
  std::int64_t days = total / 24;
  int h = static_cast<int>(total % 24);
  if (h < 0) {
    h += 24;
    days -= 1;
  }
  Timestamp out = *this;
  civil_from_days(days, out.year, out.month, out.day);
  out.hour = h;
  return out;
}

}  // namespace ux
