#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace bikevol {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

Date make_date(int year, unsigned month, unsigned day);

// "YYYY-MM-DD"; throws DataError on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(Date date);

// "YYYY-MM-DDTHH:MM" or "YYYY-MM-DDTHH:MM:SS" (a space may replace the T).
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

int year_of(Date date);
unsigned month_of(Date date);
unsigned day_of_month(Date date);
// Monday = 0 ... Sunday = 6.
unsigned weekday_index(Date date);
// 1-based.
unsigned day_of_year(Date date);

inline Date date_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

// An inclusive calendar range.
struct DateRange {
    Date first;
    Date last;

    bool contains(Date d) const { return first <= d && d <= last; }
};

}  // namespace bikevol
