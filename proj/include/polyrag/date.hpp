#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "polyrag/errors.hpp"

namespace polyrag {

// Calendar date. Validity is checked through the proleptic Gregorian
// calendar, so 2023-02-29 is invalid while 2024-02-29 is fine.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    bool ok() const {
        if (year < 1 || year > 9999) return false;
        std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
        return ymd.ok();
    }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        return buf;
    }
};

inline std::optional<Date> parse_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [&](std::size_t b, std::size_t n, int& out) {
        out = 0;
        for (std::size_t i = b; i < b + n; ++i) {
            if (s[i] < '0' || s[i] > '9') return false;
            out = out * 10 + (s[i] - '0');
        }
        return true;
    };
    Date d;
    if (!digits(0, 4, d.year) || !digits(5, 2, d.month) || !digits(8, 2, d.day))
        return std::nullopt;
    if (!d.ok()) return std::nullopt;
    return d;
}

inline Date add_days(const Date& d, long n) {
    using namespace std::chrono;
    if (!d.ok()) throw DataError("add_days on invalid date");
    const sys_days base{year_month_day{year{d.year}, month{static_cast<unsigned>(d.month)},
                                       day{static_cast<unsigned>(d.day)}}};
    const year_month_day out{base + days{n}};
    return Date{static_cast<int>(out.year()), static_cast<int>(static_cast<unsigned>(out.month())),
                static_cast<int>(static_cast<unsigned>(out.day()))};
}

// Signed whole-day difference b - a.
inline long days_between(const Date& a, const Date& b) {
    using namespace std::chrono;
    if (!a.ok() || !b.ok()) throw DataError("days_between on invalid date");
    const sys_days da{year_month_day{year{a.year}, month{static_cast<unsigned>(a.month)},
                                     day{static_cast<unsigned>(a.day)}}};
    const sys_days db{year_month_day{year{b.year}, month{static_cast<unsigned>(b.month)},
                                     day{static_cast<unsigned>(b.day)}}};
    return (db - da).count();
}

} // namespace polyrag
