#include "bikevol/core/hexgrid.hpp"

#include <cmath>

#include "bikevol/core/errors.hpp"

namespace bikevol {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

struct Plane {
    double x;
    double y;
};

Plane to_plane(const GeoPoint& p, const GeoPoint& origin) {
    const double k = kPi / 180.0 * kEarthRadiusMeters;
    return {(p.lon - origin.lon) * k * std::cos(origin.lat * kPi / 180.0),
            (p.lat - origin.lat) * k};
}

GeoPoint from_plane(const Plane& pl, const GeoPoint& origin) {
    const double k = kPi / 180.0 * kEarthRadiusMeters;
    return {origin.lat + pl.y / k, origin.lon + pl.x / (k * std::cos(origin.lat * kPi / 180.0))};
}

HexCell cube_round(double fq, double fr) {
    const double fs = -fq - fr;
    double q = std::round(fq);
    double r = std::round(fr);
    const double s = std::round(fs);
    const double dq = std::abs(q - fq);
    const double dr = std::abs(r - fr);
    const double ds = std::abs(s - fs);
    if (dq > dr && dq > ds) {
        q = -r - s;
    } else if (dr > ds) {
        r = -q - s;
    }
    return {static_cast<int>(q), static_cast<int>(r)};
}

}  // namespace

double HexGrid::edge_length_m() const {
    if (!(cell_area_km2 > 0.0)) throw ConfigError("hex grid cell area must be positive");
    return std::sqrt(2.0 * cell_area_km2 * 1e6 / (3.0 * kSqrt3));
}

double HexGrid::inradius_m() const { return edge_length_m() * kSqrt3 / 2.0; }

HexCell hex_index(const GeoPoint& p, const HexGrid& grid) {
    const double size = grid.edge_length_m();
    const Plane pl = to_plane(p, grid.origin);
    const double fq = (2.0 / 3.0 * pl.x) / size;
    const double fr = (-1.0 / 3.0 * pl.x + kSqrt3 / 3.0 * pl.y) / size;
    return cube_round(fq, fr);
}

std::array<HexCell, 6> hex_neighbors(const HexCell& c) {
    return {HexCell{c.q + 1, c.r},     HexCell{c.q + 1, c.r - 1}, HexCell{c.q, c.r - 1},
            HexCell{c.q - 1, c.r},     HexCell{c.q - 1, c.r + 1}, HexCell{c.q, c.r + 1}};
}

GeoPoint hex_center(const HexCell& c, const HexGrid& grid) {
    const double size = grid.edge_length_m();
    const Plane pl{size * 1.5 * c.q, size * kSqrt3 * (c.r + c.q / 2.0)};
    return from_plane(pl, grid.origin);
}

}  // namespace bikevol
