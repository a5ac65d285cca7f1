#include "bikevol/core/geo.hpp"

#include <algorithm>
#include <cmath>

#include "bikevol/core/errors.hpp"

namespace bikevol {

namespace {

double to_rad(double deg) { return deg * kPi / 180.0; }

GeoPoint lerp(const GeoPoint& a, const GeoPoint& b, double t) {
    return {a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t};
}

}  // namespace

GeoPoint make_geo_point(double lat, double lon) {
    GeoPoint p{lat, lon};
    if (!p.valid() || !std::isfinite(lat) || !std::isfinite(lon)) {
        throw DataError("invalid coordinates (" + std::to_string(lat) + ", " +
                        std::to_string(lon) + ")");
    }
    return p;
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
    if (a == b) return 0.0;
    const double dlat = to_rad(b.lat - a.lat);
    const double dlon = to_rad(b.lon - a.lon);
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    double h = s1 * s1 + std::cos(to_rad(a.lat)) * std::cos(to_rad(b.lat)) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

double polyline_length(std::span<const GeoPoint> points) {
    double total = 0.0;
    for (size_t i = 1; i < points.size(); ++i) total += haversine_distance(points[i - 1], points[i]);
    return total;
}

std::vector<GeoPoint> densify(std::span<const GeoPoint> points, double step_m) {
    std::vector<GeoPoint> out;
    if (points.empty()) return out;
    out.push_back(points[0]);
    for (size_t i = 1; i < points.size(); ++i) {
        const double len = haversine_distance(points[i - 1], points[i]);
        const auto pieces = static_cast<int>(std::ceil(len / step_m));
        for (int k = 1; k < pieces; ++k) {
            out.push_back(lerp(points[i - 1], points[i], static_cast<double>(k) / pieces));
        }
        out.push_back(points[i]);
    }
    return out;
}

bool polyline_within_radius(std::span<const GeoPoint> points, const GeoPoint& center,
                            double radius_m) {
    for (const auto& p : points) {
        if (haversine_distance(p, center) <= radius_m) return true;
    }
    for (size_t i = 1; i < points.size(); ++i) {
        const double len = haversine_distance(points[i - 1], points[i]);
        const auto pieces = static_cast<int>(std::ceil(len / kDensifyStepMeters));
        for (int k = 1; k < pieces; ++k) {
            const auto q = lerp(points[i - 1], points[i], static_cast<double>(k) / pieces);
            if (haversine_distance(q, center) <= radius_m) return true;
        }
    }
    return false;
}

StreetSegment make_segment(std::string id, std::vector<GeoPoint> polyline) {
    if (polyline.size() < 2) {
        throw DataError("street segment '" + id + "' needs at least two points");
    }
    StreetSegment seg{std::move(id), std::move(polyline), 0.0};
    seg.length = polyline_length(seg.polyline);
    return seg;
}

GeoPoint point_along(std::span<const GeoPoint> points, double distance_m) {
    if (points.empty()) throw PreconditionError("point_along on an empty polyline");
    if (distance_m <= 0.0) return points.front();
    double walked = 0.0;
    for (size_t i = 1; i < points.size(); ++i) {
        const double len = haversine_distance(points[i - 1], points[i]);
        if (walked + len >= distance_m && len > 0.0) {
            return lerp(points[i - 1], points[i], (distance_m - walked) / len);
        }
        walked += len;
    }
    return points.back();
}

GeoPoint segment_midpoint(const StreetSegment& segment) {
    return point_along(segment.polyline, polyline_length(segment.polyline) / 2.0);
}

bool polygon_contains(std::span<const GeoPoint> ring, const GeoPoint& p) {
    bool inside = false;
    const size_t n = ring.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = ring[i];
        const auto& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

}  // namespace bikevol
