#pragma once

#include <chrono>
#include <cstdio>
#include <string>

#include "heatcast/common.hpp"

namespace heatcast {

// Calendar day in the dataset's local civil time.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  bool operator==(const Date&) const = default;
  auto operator<=>(const Date&) const = default;
};

inline bool is_leap_year(int y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_year(int y) { return is_leap_year(y) ? 366 : 365; }

inline bool date_valid(const Date& d) {
  using namespace std::chrono;
  return year_month_day{year{d.year}, month{unsigned(d.month)},
                        day{unsigned(d.day)}}
      .ok();
}

// Days since 1970-01-01.
inline int64_t date_serial(const Date& d) {
  using namespace std::chrono;
  if (!date_valid(d)) throw DataError("invalid date " + std::to_string(d.year));
  sys_days sd{year_month_day{year{d.year}, month{unsigned(d.month)},
                             day{unsigned(d.day)}}};
  return sd.time_since_epoch().count();
}

inline Date date_from_serial(int64_t serial) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{serial}}};
  return Date{int(ymd.year()), int(unsigned(ymd.month())),
              int(unsigned(ymd.day()))};
}

// 1-based day of year.
inline int day_of_year(const Date& d) {
  return int(date_serial(d) - date_serial(Date{d.year, 1, 1})) + 1;
}

// Monday = 0 ... Sunday = 6.
inline int weekday_index(const Date& d) {
  using namespace std::chrono;
  weekday wd{sys_days{days{date_serial(d)}}};
  return int(wd.iso_encoding()) - 1;
}

inline std::string date_to_string(const Date& d) {
  char buf[16];
  snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return std::string(buf);
}

inline Date date_from_string(const std::string& s) {
  Date d;
  if (sscanf(s.c_str(), "%d-%d-%d", &d.year, &d.month, &d.day) != 3 ||
      !date_valid(d)) {
    throw DataError("cannot parse date '" + s + "' (expected YYYY-MM-DD)");
  }
  return d;
}

// Timestamp = date + seconds past local midnight.
struct Timestamp {
  Date date;
  int seconds = 0;
};

// ISO-8601 local time, e.g. "2023-06-12T10:04:00"; seconds optional.
inline Timestamp timestamp_from_string(const std::string& s) {
  Timestamp t;
  int h = 0, m = 0, sec = 0;
  int n = sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &t.date.year, &t.date.month,
                 &t.date.day, &h, &m, &sec);
  if (n < 5 || !date_valid(t.date) || h < 0 || h > 23 || m < 0 || m > 59 ||
      sec < 0 || sec > 59) {
    throw DataError("cannot parse timestamp '" + s + "'");
  }
  t.seconds = h * 3600 + m * 60 + sec;
  return t;
}

inline std::string timestamp_to_string(const Timestamp& t) {
  char buf[24];
  snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02d",
           date_to_string(t.date).c_str(), t.seconds / 3600,
           (t.seconds / 60) % 60, t.seconds % 60);
  return std::string(buf);
}

}  // namespace heatcast
