#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bikevol/ingest/bundle.hpp"
#include "bikevol/pipeline/feature_table.hpp"
#include "json.hpp"

namespace bikevol::pipeline {

// Radius value that stands for "the whole city".
inline constexpr double kCityRadius = std::numeric_limits<double>::infinity();

// "250" for finite radii, "city" for kCityRadius.
std::string radius_label(double radius_m);

struct FeatureConfig {
    std::vector<double> bikeshare_radii{250, 500, 1000, 2000, 5000, kCityRadius};
    std::vector<double> strava_radii{500, 1000, 2000, 5000, kCityRadius};
    std::vector<double> poi_radii{500, 1000, 2000, 5000};
    double motorized_radius = 6000.0;

    // Radii must be positive, strictly increasing and unique. Throws ConfigError.
    void validate() const;
};

// Radii lists accept numbers or the string "city".
FeatureConfig feature_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeatureConfig& config);

using NamedFeatures = std::vector<std::pair<std::string, double>>;

/// A trip with its route densified once, so radius tests over many stations stay cheap.
struct PreparedTrip {
    GeoPoint origin;
    GeoPoint destination;
    Date start_date;
    std::vector<GeoPoint> path;
    double min_lat = 0, max_lat = 0, min_lon = 0, max_lon = 0;
};

// Uses the route when present, else the straight origin-destination line.
PreparedTrip prepare_trip(const ingest::Trip& trip);

/// Per radius: trips passing (route within the disc), started and ended inside, counting only
/// trips that start on `date`. Columns: bikeshare_{pass,start,end}_<radius>.
NamedFeatures bikeshare_features(std::span<const PreparedTrip> trips, const GeoPoint& station,
                                 Date date, const std::vector<double>& radii);

/// Strava lookups over segment-days and hexagon-days.
class StravaIndex {
public:
    StravaIndex(const ingest::SourceBundle& bundle);

    // Segment ids whose geometry comes within `radius_m` of the point (all ids for city).
    std::vector<size_t> segments_within(const GeoPoint& p, double radius_m) const;

    /// Columns: strava_seg_<field>_<radius> (mean over qualifying segments with data on
    /// `date`; NaN when none), strava_hex_<field> (containing cell) and strava_hexnb_<field>
    /// (mean over the six neighbors that have data).
    NamedFeatures features(const GeoPoint& station, Date date, const std::vector<double>& radii) const;

    // Same as features() with the per-radius segment sets precomputed by segments_within.
    NamedFeatures features(const GeoPoint& station, Date date, const std::vector<double>& radii,
                           const std::vector<std::vector<size_t>>& segment_sets) const;

private:
    const ingest::SourceBundle* bundle_;
    std::vector<std::string> segment_ids_;
    std::vector<std::vector<GeoPoint>> segment_paths_;
    std::map<std::pair<Date, size_t>, const ingest::StravaSegmentDay*> segment_days_;
    std::map<std::pair<Date, HexCell>, const ingest::StravaHexDay*> hex_days_;
};

NamedFeatures strava_features(const ingest::SourceBundle& bundle, const GeoPoint& station, Date date,
                              const std::vector<double>& radii);

/// Per vehicle class: mean volume and speed over detectors within `radius_m` and city-wide.
/// Columns: motor_<class>_{volume,speed}_{<radius>,city}. Empty sets give NaN.
NamedFeatures motorized_features(std::span<const ingest::MotorizedObservation> observations,
                                 const GeoPoint& station, Date date, double radius_m = 6000.0);

/// Location-level features: coordinates, distance to center, maxspeed and lane type of the
/// nearest street edge, POI counts per radius, land-use shares of the containing planning
/// area, and its socioeconomic indicators for map_socio_year(year).
NamedFeatures static_features(const ingest::SourceBundle& bundle, const GeoPoint& station, int year,
                              const std::vector<double>& poi_radii);

// Planning area containing the point, falling back to the one with the nearest centroid.
// Returns nullptr when the bundle has no planning areas.
const ingest::PlanningArea* containing_area(const ingest::SourceBundle& bundle, const GeoPoint& p);

// Columns: weather_<field>; NaN when the date has no weather record.
NamedFeatures weather_features(const ingest::SourceBundle& bundle, Date date);

// Columns: month, day_of_month, weekday (Monday = 0), weekend, year, school_holiday, public_holiday.
NamedFeatures time_holiday_features(Date date, const std::map<Date, ingest::HolidayFlags>& holidays);

/// A counting location: a standalone station or the merged pair of directional counters.
struct CountingLocation {
    std::string id;
    GeoPoint location;
    StationKind kind = StationKind::LongTerm;
};

std::vector<CountingLocation> counting_locations(const ingest::SourceBundle& bundle);

// Daily targets per counting location for the window, directional counters combined.
std::vector<CountObservation> location_targets(const ingest::SourceBundle& bundle, CountWindow window);

/// One row per counting-location/date target. Trips must already be cleaned.
FeatureTable assemble(const ingest::SourceBundle& bundle, const std::vector<ingest::Trip>& cleaned_trips,
                      CountWindow window, const FeatureConfig& config = {}, int workers = 0);

struct QueryRow {
    Date date;
    double target = 0.0;  // NaN when unknown (prediction-only rows)
};

/// Feature rows for arbitrary points: per_loc[i] lists the rows of locations[i].
FeatureTable assemble_for(const ingest::SourceBundle& bundle, const std::vector<ingest::Trip>& cleaned_trips,
                          const std::vector<CountingLocation>& locations,
                          const std::vector<std::vector<QueryRow>>& per_loc, CountWindow window,
                          const FeatureConfig& config = {}, int workers = 0);

}  // namespace bikevol::pipeline
