#include "bikevol/core/time.hpp"

#include <charconv>
#include <cstdio>

#include "bikevol/core/errors.hpp"

namespace bikevol {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError("malformed date/time '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

const char* category_name(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Runtime: return "runtime";
        case ErrorCategory::Precondition: return "precondition";
    }
    return "unknown";
}

Date make_date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date " + std::to_string(year) + "-" +
                        std::to_string(month) + "-" + std::to_string(day));
    }
    return std::chrono::sys_days{ymd};
}

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("malformed date '" + std::string(text) + "'");
    }
    return make_date(parse_int(text.substr(0, 4), text), parse_int(text.substr(5, 2), text),
                     parse_int(text.substr(8, 2), text));
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Timestamp parse_timestamp(std::string_view text) {
    if (text.size() != 16 && text.size() != 19) {
        throw DataError("malformed timestamp '" + std::string(text) + "'");
    }
    if ((text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
        (text.size() == 19 && text[16] != ':')) {
        throw DataError("malformed timestamp '" + std::string(text) + "'");
    }
    const Date day = parse_date(text.substr(0, 10));
    const int hour = parse_int(text.substr(11, 2), text);
    const int minute = parse_int(text.substr(14, 2), text);
    const int second = text.size() == 19 ? parse_int(text.substr(17, 2), text) : 0;
    if (hour > 23 || minute > 59 || second > 59) {
        throw DataError("timestamp out of range '" + std::string(text) + "'");
    }
    return Timestamp{day} + std::chrono::hours{hour} + std::chrono::minutes{minute} +
           std::chrono::seconds{second};
}

std::string format_timestamp(Timestamp ts) {
    const Date day = date_of(ts);
    const auto secs = (ts - Timestamp{day}).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lld", static_cast<long long>(secs / 3600),
                  static_cast<long long>((secs / 60) % 60), static_cast<long long>(secs % 60));
    return format_date(day) + buf;
}

int year_of(Date date) { return static_cast<int>(std::chrono::year_month_day{date}.year()); }

unsigned month_of(Date date) {
    return static_cast<unsigned>(std::chrono::year_month_day{date}.month());
}

unsigned day_of_month(Date date) {
    return static_cast<unsigned>(std::chrono::year_month_day{date}.day());
}

unsigned weekday_index(Date date) {
    // iso_encoding: Monday = 1 ... Sunday = 7
    return std::chrono::weekday{date}.iso_encoding() - 1;
}

unsigned day_of_year(Date date) {
    const Date jan1 = make_date(year_of(date), 1, 1);
    return static_cast<unsigned>((date - jan1).count()) + 1;
}

}  // namespace bikevol
