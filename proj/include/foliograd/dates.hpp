#pragma once

#include <cstdint>
#include <cstdio>
#include <compare>
#include <string>
#include <vector>

#include "foliograd/errors.hpp"

namespace foliograd {

// Calendar date, ISO-8601 text form YYYY-MM-DD. Stored as year/month/day;
// ordering and arithmetic go through the serial day number.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    // Days since 1970-01-01 (civil calendar, negative before the epoch).
    long serial() const {
        long y = year - (month <= 2 ? 1 : 0);
        long era = (y >= 0 ? y : y - 399) / 400;
        long yoe = y - era * 400;
        long doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
        long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + doe - 719468;
    }

    static Date from_serial(long z) {
        z += 719468;
        long era = (z >= 0 ? z : z - 146096) / 146097;
        long doe = z - era * 146097;
        long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        long y = yoe + era * 400;
        long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        long mp = (5 * doy + 2) / 153;
        long d = doy - (153 * mp + 2) / 5 + 1;
        long m = mp + (mp < 10 ? 3 : -9);
        return Date{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m),
                    static_cast<int>(d)};
    }

    // 0 = Monday ... 6 = Sunday.
    int weekday() const {
        long s = serial();
        return static_cast<int>(((s % 7) + 10) % 7);  // 1970-01-01 was a Thursday
    }

    bool is_weekday() const { return weekday() < 5; }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return std::string(buf);
    }

    auto operator<=>(const Date& o) const { return serial() <=> o.serial(); }
    bool operator==(const Date& o) const {
        return year == o.year && month == o.month && day == o.day;
    }
};

inline bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
    static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return d[m - 1];
}

// Parses strict ISO-8601 YYYY-MM-DD.
inline Date parse_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3 ||
        s.size() != 10 || m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
        throw DataError("unparsable date: '" + s + "' (expected YYYY-MM-DD)");
    }
    return Date{y, m, d};
}

// First weekday on or after `start`, then `count` consecutive weekdays.
inline std::vector<Date> weekday_sequence(Date start, std::size_t count) {
    std::vector<Date> out;
    out.reserve(count);
    long s = start.serial();
    while (out.size() < count) {
        Date d = Date::from_serial(s++);
        if (d.is_weekday()) out.push_back(d);
    }
    return out;
}

}  // namespace foliograd
