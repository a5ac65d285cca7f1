#pragma once

#include <span>
#include <string>
#include <vector>

namespace bikevol {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;
inline constexpr double kPi = 3.14159265358979323846;

struct GeoPoint {
    double lat = 0.0;  // degrees WGS84
    double lon = 0.0;

    bool valid() const { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }
    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Throws DataError when the coordinates fall outside the WGS84 ranges.
GeoPoint make_geo_point(double lat, double lon);

// Great-circle distance in meters on a sphere of radius kEarthRadiusMeters.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

// Sum of haversine distances between consecutive points.
double polyline_length(std::span<const GeoPoint> points);

// Inserts interpolated points so no gap between consecutive points exceeds step_m.
std::vector<GeoPoint> densify(std::span<const GeoPoint> points, double step_m);

// True if any vertex of the polyline, densified at 25 m, lies within radius_m of center.
bool polyline_within_radius(std::span<const GeoPoint> points, const GeoPoint& center,
                            double radius_m);

inline constexpr double kDensifyStepMeters = 25.0;

struct StreetSegment {
    std::string id;
    std::vector<GeoPoint> polyline;
    double length = 0.0;  // meters
};

// Builds a segment and computes its length; throws DataError with fewer than two points.
StreetSegment make_segment(std::string id, std::vector<GeoPoint> polyline);

// Point at half the cumulative length, interpolated linearly on the containing edge.
GeoPoint segment_midpoint(const StreetSegment& segment);

// Point at `distance_m` along the polyline (clamped to its ends).
GeoPoint point_along(std::span<const GeoPoint> points, double distance_m);

// Point-in-polygon (even-odd rule) on raw lat/lon; the ring need not be closed.
bool polygon_contains(std::span<const GeoPoint> ring, const GeoPoint& p);

}  // namespace bikevol
