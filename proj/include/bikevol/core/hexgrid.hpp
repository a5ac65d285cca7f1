#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>

#include "bikevol/core/geo.hpp"

namespace bikevol {

/// Flat-top hexagonal grid anchored at `origin`.
///
/// Cells are addressed in axial coordinates (q, r). Points are placed on a local
/// equirectangular tangent plane around the origin, which is adequate at city scale.
struct HexGrid {
    GeoPoint origin{};
    double cell_area_km2 = 0.66;

    // Circumradius (= edge length) in meters, from A = (3*sqrt(3)/2) * s^2.
    double edge_length_m() const;
    // Distance from center to the middle of an edge.
    double inradius_m() const;
};

struct HexCell {
    int q = 0;
    int r = 0;

    friend auto operator<=>(const HexCell&, const HexCell&) = default;
};

// Throws ConfigError if the grid's cell area is not positive.
HexCell hex_index(const GeoPoint& p, const HexGrid& grid);
std::array<HexCell, 6> hex_neighbors(const HexCell& c);
GeoPoint hex_center(const HexCell& c, const HexGrid& grid);

struct HexCellHash {
    size_t operator()(const HexCell& c) const noexcept {
        return std::hash<long long>{}((static_cast<long long>(c.q) << 32) ^
                                      static_cast<unsigned>(c.r));
    }
};

}  // namespace bikevol
