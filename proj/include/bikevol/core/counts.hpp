#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bikevol/core/geo.hpp"
#include "bikevol/core/time.hpp"

namespace bikevol {

enum class StationKind { LongTerm, ShortTerm };

// FullDay covers hours 0-23, Daytime hours 7-18 (the 7h-19h window).
enum class CountWindow { FullDay, Daytime };

std::string_view to_string(StationKind kind);
std::string_view to_string(CountWindow window);
StationKind parse_station_kind(std::string_view text);
CountWindow parse_count_window(std::string_view text);

struct Station {
    std::string id;
    GeoPoint location;
    StationKind kind = StationKind::LongTerm;
    int installed_year = 0;
    // Counters on opposite sides of a street share a location id; empty means standalone.
    std::string location_id;
};

struct HourlyCount {
    std::string station_id;
    Timestamp timestamp;
    std::int64_t count = 0;
};

struct CountObservation {
    std::string station_id;
    Date date;
    CountWindow window = CountWindow::FullDay;
    std::int64_t count = 0;

    friend bool operator==(const CountObservation&, const CountObservation&) = default;
};

/// Sums the per-direction counters of each pairing group into one observation keyed by the
/// group's location. A date missing from any member is dropped for the whole group.
/// Stations that belong to no group pass through unchanged.
std::vector<CountObservation> combine_directional_counters(
    const std::vector<CountObservation>& observations,
    const std::map<std::string, std::set<std::string>>& pairing);

/// Daily totals per station for `window`. A station-date missing any hour of the window
/// yields no row. Throws DataError on duplicate (station, timestamp) or non-whole hours.
std::vector<CountObservation> aggregate_daily(const std::vector<HourlyCount>& hourly,
                                              CountWindow window);

}  // namespace bikevol
