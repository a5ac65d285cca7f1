#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bikevol/core/counts.hpp"
#include "bikevol/core/geo.hpp"
#include "bikevol/core/hexgrid.hpp"
#include "bikevol/core/time.hpp"

namespace bikevol::ingest {

// Fixed attribute vocabularies. Column order here is the file schema order.
inline constexpr std::array<std::string_view, 10> kWeatherFields = {
    "tavg", "tmin", "tmax", "prcp", "snow", "tsun", "wspd", "wdir", "wpgt", "pres"};

inline constexpr std::array<std::string_view, 10> kLandUseCategories = {
    "farming", "horticulture", "cemeteries", "waterways", "industry",
    "gardening", "parks", "traffic", "forests", "residential"};

inline constexpr std::array<std::string_view, 15> kSocioIndicators = {
    "population_density", "inhabitants",    "average_age",     "share_female",
    "share_migration",    "share_foreign",  "share_unemployed", "share_tenure_5y",
    "moving_in_rate",     "moving_out_rate", "share_under_18", "share_18_65",
    "share_over_65",      "greying_index",  "birth_rate"};

inline constexpr std::array<std::string_view, 5> kPoiCategories = {"shop", "education", "hotel",
                                                                   "hospital", "industry"};

inline constexpr std::array<std::string_view, 17> kStravaFields = {
    "trips_total",     "trips_non_ebike", "trips_ebike",      "trips_commute",
    "trips_leisure",   "trips_morning",   "trips_midday",     "trips_evening",
    "trips_night",     "trips_male",      "trips_female",     "trips_age_18_34",
    "trips_age_35_54", "trips_age_55_plus", "trips_originating", "trips_arriving",
    "avg_speed"};

inline constexpr std::array<std::string_view, 3> kVehicleClasses = {"all", "car", "lorry"};

struct BikePosition {
    std::string bike_id;
    GeoPoint position;
};

struct AvailabilitySnapshot {
    Timestamp timestamp;
    std::vector<BikePosition> bikes;
};

struct Trip {
    std::string bike_id;
    GeoPoint origin;
    GeoPoint destination;
    Timestamp start;
    Timestamp end;
    std::vector<GeoPoint> route;
    std::optional<double> routed_distance;  // meters
    std::optional<double> mean_speed;       // km/h
    bool unroutable = false;

    double duration_s() const { return static_cast<double>((end - start).count()); }
    bool routed() const { return routed_distance.has_value() && mean_speed.has_value(); }
};

struct WeatherDay {
    Date date;
    std::array<double, kWeatherFields.size()> values{};
};

struct PlanningArea {
    std::string id;
    std::vector<GeoPoint> ring;
    double area_km2 = 0.0;
    std::array<double, kLandUseCategories.size()> landuse_km2{};
};

// NaN marks an indicator the statistics office did not publish.
struct SocioRecord {
    std::string area_id;
    int year = 0;
    std::array<double, kSocioIndicators.size()> values{};
};

struct PointOfInterest {
    std::string id;
    std::string category;
    GeoPoint location;
};

struct MotorizedObservation {
    std::string detector_id;
    GeoPoint location;
    Date date;
    std::string vehicle_class;
    double volume = 0.0;  // vehicles/day
    double speed = 0.0;   // km/h
};

struct HolidayFlags {
    bool school = false;
    bool public_holiday = false;
};

struct StravaSegmentDay {
    std::string segment_id;
    Date date;
    std::array<double, kStravaFields.size()> values{};
};

struct StravaHexDay {
    HexCell cell;
    Date date;
    std::array<double, kStravaFields.size()> values{};
};

struct StreetEdge {
    StreetSegment segment;
    size_t from = 0;
    size_t to = 0;
    bool bicycle = true;
    double maxspeed = 50.0;
    int lane_type = 0;  // 0 none, 1 painted lane, 2 protected track, 3 shared path
};

struct StreetGraph {
    std::vector<GeoPoint> nodes;
    std::vector<StreetEdge> edges;
    std::map<std::pair<double, double>, size_t> node_index;

    // Deduplicates endpoints by exact coordinates; returns the edge index.
    size_t add_edge(StreetSegment segment, bool bicycle, double maxspeed, int lane_type);
};

struct BundleMeta {
    std::vector<DateRange> study_periods;
    GeoPoint city_center;
    HexGrid hex_grid;

    bool in_study_period(Date d) const;
};

struct SourceBundle {
    BundleMeta meta;
    std::vector<Station> stations;
    std::vector<HourlyCount> counts;
    std::vector<WeatherDay> weather;
    std::vector<PlanningArea> planning_areas;
    std::vector<SocioRecord> socio;
    std::vector<PointOfInterest> pois;
    std::vector<MotorizedObservation> motorized;
    std::map<Date, HolidayFlags> holidays;
    std::vector<StravaSegmentDay> strava_segments;
    std::vector<StravaHexDay> strava_hexagons;
    StreetGraph street_graph;
    std::vector<AvailabilitySnapshot> snapshots;
    std::vector<Trip> trips;  // unrouted trips when supplied directly instead of snapshots
};

/// Checks every foreign key and the study-period rule; throws DataError on the first
/// violation, naming the offending record.
void validate_bundle(const SourceBundle& bundle);

/// Maps a study year to the socioeconomic year used for it: the latest available year
/// not after `study_year`, except that 2022 uses 2020. Throws ConfigError when nothing fits.
int map_socio_year(int study_year, const std::set<int>& available_years);

}  // namespace bikevol::ingest
