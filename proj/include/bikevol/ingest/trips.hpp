#pragma once

#include <optional>
#include <vector>

#include "bikevol/ingest/bundle.hpp"

namespace bikevol::ingest {

/// Infers rentals from a per-minute availability feed: a bike seen at A, missing from one or
/// more snapshots, then seen again at B is one trip A->B spanning the last sighting before
/// the gap to the first sighting after it. Gaps open at the start or end of the stream are
/// ignored. Output is ordered by (start, bike_id). Throws DataError on out-of-order input.
std::vector<Trip> reconstruct_trips(const std::vector<AvailabilitySnapshot>& snapshots);

// Inverse of reconstruct_trips for tests and synthetic feeds: one snapshot per minute in
// [first, last], each bike listed at its parking spot unless a trip is in progress.
std::vector<AvailabilitySnapshot> snapshots_from_trips(
    const std::vector<Trip>& trips, const std::vector<BikePosition>& initial_positions,
    Timestamp first, Timestamp last);

struct RoutePath {
    std::vector<size_t> nodes;
    std::vector<size_t> edges;
    double length = 0.0;
};

/// Shortest path over bicycle-permitted edges (Dijkstra, ties broken by node index).
/// Returns nullopt when `to` is unreachable from `from`.
std::optional<RoutePath> shortest_path(const StreetGraph& graph, size_t from, size_t to);

// Nearest node incident to at least one bicycle-permitted edge; nullopt for an empty graph.
std::optional<size_t> nearest_bicycle_node(const StreetGraph& graph, const GeoPoint& p);

/// Routes the trip between the nodes nearest its endpoints. routed_distance adds both snap
/// distances to the path length; mean_speed is in km/h. Unreachable endpoints leave the trip
/// unrouted with `unroutable` set.
Trip route_trip(const StreetGraph& graph, Trip trip);

}  // namespace bikevol::ingest
