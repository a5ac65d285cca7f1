#include "bikevol/core/counts.hpp"

#include <algorithm>
#include <bitset>
#include <tuple>

#include "bikevol/core/errors.hpp"

namespace bikevol {

std::string_view to_string(StationKind kind) {
    return kind == StationKind::LongTerm ? "long_term" : "short_term";
}

std::string_view to_string(CountWindow window) {
    return window == CountWindow::FullDay ? "full_day" : "daytime";
}

StationKind parse_station_kind(std::string_view text) {
    if (text == "long_term") return StationKind::LongTerm;
    if (text == "short_term") return StationKind::ShortTerm;
    throw DataError("unknown station kind '" + std::string(text) + "'");
}

CountWindow parse_count_window(std::string_view text) {
    if (text == "full_day") return CountWindow::FullDay;
    if (text == "daytime") return CountWindow::Daytime;
    throw ConfigError("unknown count window '" + std::string(text) + "'");
}

std::vector<CountObservation> combine_directional_counters(
    const std::vector<CountObservation>& observations,
    const std::map<std::string, std::set<std::string>>& pairing) {
    std::map<std::string, std::string> group_of;
    for (const auto& [location, members] : pairing) {
        for (const auto& id : members) {
            if (!group_of.emplace(id, location).second) {
                throw ConfigError("station '" + id + "' appears in more than one pairing group");
            }
        }
    }

    struct Partial {
        std::int64_t sum = 0;
        std::set<std::string> reported;
    };
    std::map<std::tuple<std::string, Date, CountWindow>, Partial> grouped;
    std::map<std::string, std::map<std::string, std::set<CountWindow>>> windows_seen;
    std::vector<CountObservation> out;

    for (const auto& obs : observations) {
        const auto it = group_of.find(obs.station_id);
        if (it == group_of.end()) {
            out.push_back(obs);
            continue;
        }
        auto& partial = grouped[{it->second, obs.date, obs.window}];
        if (!partial.reported.insert(obs.station_id).second) {
            throw DataError("duplicate observation for station '" + obs.station_id + "' on " +
                            format_date(obs.date));
        }
        partial.sum += obs.count;
        windows_seen[it->second][obs.station_id].insert(obs.window);
    }

    for (const auto& [location, per_station] : windows_seen) {
        const auto& reference = per_station.begin()->second;
        for (const auto& [station, windows] : per_station) {
            if (windows != reference) {
                throw ConfigError("pairing group '" + location +
                                  "' mixes count windows across its counters");
            }
        }
    }

    for (const auto& [key, partial] : grouped) {
        const auto& [location, date, window] = key;
        if (partial.reported.size() != pairing.at(location).size()) continue;
        out.push_back({location, date, window, partial.sum});
    }

    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.station_id, a.date, a.window) < std::tie(b.station_id, b.date, b.window);
    });
    return out;
}

std::vector<CountObservation> aggregate_daily(const std::vector<HourlyCount>& hourly,
                                              CountWindow window) {
    struct Day {
        std::bitset<24> present;
        std::int64_t hours[24] = {};
    };
    std::map<std::pair<std::string, Date>, Day> days;
    for (const auto& h : hourly) {
        const Date d = date_of(h.timestamp);
        const auto secs = (h.timestamp - Timestamp{d}).count();
        if (secs % 3600 != 0) {
            throw DataError("hourly count for '" + h.station_id + "' at " +
                            format_timestamp(h.timestamp) + " is not on a whole hour");
        }
        if (h.count < 0) {
            throw DataError("negative hourly count for '" + h.station_id + "' at " +
                            format_timestamp(h.timestamp));
        }
        const auto hour = static_cast<size_t>(secs / 3600);
        auto& day = days[{h.station_id, d}];
        if (day.present.test(hour)) {
            throw DataError("duplicate hourly count for station '" + h.station_id + "' at " +
                            format_timestamp(h.timestamp));
        }
        day.present.set(hour);
        day.hours[hour] = h.count;
    }

    const size_t first = window == CountWindow::FullDay ? 0 : 7;
    const size_t last = window == CountWindow::FullDay ? 23 : 18;
    std::vector<CountObservation> out;
    for (const auto& [key, day] : days) {
        std::int64_t total = 0;
        bool complete = true;
        for (size_t h = first; h <= last; ++h) {
            if (!day.present.test(h)) {
                complete = false;
                break;
            }
            total += day.hours[h];
        }
        if (complete) out.push_back({key.first, key.second, window, total});
    }
    return out;
}

}  // namespace bikevol
