#include "bikevol/ingest/trips.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "bikevol/core/errors.hpp"

namespace bikevol::ingest {

std::vector<Trip> reconstruct_trips(const std::vector<AvailabilitySnapshot>& snapshots) {
    struct Sighting {
        Timestamp ts;
        GeoPoint position;
        size_t snapshot;  // index of the last snapshot the bike appeared in
    };
    std::unordered_map<std::string, Sighting> last_seen;
    std::vector<Trip> trips;

    for (size_t i = 0; i < snapshots.size(); ++i) {
        const auto& snap = snapshots[i];
        if (i > 0 && snap.timestamp <= snapshots[i - 1].timestamp) {
            throw DataError("snapshot at " + format_timestamp(snap.timestamp) +
                            " is not after the previous one");
        }
        for (const auto& bike : snap.bikes) {
            auto it = last_seen.find(bike.bike_id);
            if (it == last_seen.end()) {
                last_seen.emplace(bike.bike_id, Sighting{snap.timestamp, bike.position, i});
                continue;
            }
            if (it->second.snapshot + 1 < i) {
                Trip t;
                t.bike_id = bike.bike_id;
                t.origin = it->second.position;
                t.destination = bike.position;
                t.start = it->second.ts;
                t.end = snap.timestamp;
                trips.push_back(std::move(t));
            } else if (it->second.snapshot == i) {
                throw DataError("bike '" + bike.bike_id + "' listed twice at " +
                                format_timestamp(snap.timestamp));
            }
            it->second = Sighting{snap.timestamp, bike.position, i};
        }
    }

    std::stable_sort(trips.begin(), trips.end(), [](const Trip& a, const Trip& b) {
        return std::tie(a.start, a.bike_id) < std::tie(b.start, b.bike_id);
    });
    return trips;
}

std::vector<AvailabilitySnapshot> snapshots_from_trips(
    const std::vector<Trip>& trips, const std::vector<BikePosition>& initial_positions,
    Timestamp first, Timestamp last) {
    std::map<std::string, std::vector<const Trip*>> by_bike;
    for (const auto& t : trips) by_bike[t.bike_id].push_back(&t);
    for (auto& [id, list] : by_bike) {
        std::sort(list.begin(), list.end(),
                  [](const Trip* a, const Trip* b) { return a->start < b->start; });
    }

    std::vector<AvailabilitySnapshot> out;
    for (Timestamp ts = first; ts <= last; ts += std::chrono::minutes{1}) {
        AvailabilitySnapshot snap{ts, {}};
        for (const auto& bike : initial_positions) {
            GeoPoint where = bike.position;
            bool riding = false;
            auto it = by_bike.find(bike.bike_id);
            if (it != by_bike.end()) {
                for (const Trip* t : it->second) {
                    if (ts >= t->end) {
                        where = t->destination;
                    } else if (ts > t->start) {
                        riding = true;
                        break;
                    } else {
                        break;
                    }
                }
            }
            if (!riding) snap.bikes.push_back({bike.bike_id, where});
        }
        out.push_back(std::move(snap));
    }
    return out;
}

std::optional<RoutePath> shortest_path(const StreetGraph& graph, size_t from, size_t to) {
    const size_t n = graph.nodes.size();
    if (from >= n || to >= n) throw PreconditionError("shortest_path: node index out of range");

    std::vector<std::vector<std::pair<size_t, size_t>>> adjacency(n);  // (neighbor, edge)
    for (size_t e = 0; e < graph.edges.size(); ++e) {
        const auto& edge = graph.edges[e];
        if (!edge.bicycle) continue;
        adjacency[edge.from].push_back({edge.to, e});
        adjacency[edge.to].push_back({edge.from, e});
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<size_t> via_edge(n, SIZE_MAX);
    std::vector<size_t> prev(n, SIZE_MAX);
    using Item = std::pair<double, size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[from] = 0.0;
    queue.push({0.0, from});
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        if (u == to) break;
        for (const auto& [v, e] : adjacency[u]) {
            const double nd = d + graph.edges[e].segment.length;
            if (nd < dist[v]) {
                dist[v] = nd;
                prev[v] = u;
                via_edge[v] = e;
                queue.push({nd, v});
            }
        }
    }
    if (dist[to] == kInf) return std::nullopt;

    RoutePath path;
    path.length = dist[to];
    for (size_t v = to; v != from; v = prev[v]) {
        path.nodes.push_back(v);
        path.edges.push_back(via_edge[v]);
    }
    path.nodes.push_back(from);
    std::reverse(path.nodes.begin(), path.nodes.end());
    std::reverse(path.edges.begin(), path.edges.end());
    return path;
}

std::optional<size_t> nearest_bicycle_node(const StreetGraph& graph, const GeoPoint& p) {
    std::vector<char> usable(graph.nodes.size(), 0);
    for (const auto& e : graph.edges) {
        if (e.bicycle) usable[e.from] = usable[e.to] = 1;
    }
    std::optional<size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < graph.nodes.size(); ++i) {
        if (!usable[i]) continue;
        const double d = haversine_distance(p, graph.nodes[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

Trip route_trip(const StreetGraph& graph, Trip trip) {
    trip.route.clear();
    trip.routed_distance.reset();
    trip.mean_speed.reset();
    trip.unroutable = false;

    const auto from = nearest_bicycle_node(graph, trip.origin);
    const auto to = nearest_bicycle_node(graph, trip.destination);
    std::optional<RoutePath> path;
    if (from && to) path = shortest_path(graph, *from, *to);
    if (!path) {
        trip.unroutable = true;
        return trip;
    }

    const double snap_out = haversine_distance(trip.origin, graph.nodes[*from]);
    const double snap_in = haversine_distance(trip.destination, graph.nodes[*to]);
    trip.route.push_back(trip.origin);
    trip.route.push_back(graph.nodes[*from]);
    for (size_t k = 0; k < path->edges.size(); ++k) {
        const auto& edge = graph.edges[path->edges[k]];
        const auto& pts = edge.segment.polyline;
        if (edge.from == path->nodes[k]) {
            trip.route.insert(trip.route.end(), pts.begin() + 1, pts.end());
        } else {
            trip.route.insert(trip.route.end(), pts.rbegin() + 1, pts.rend());
        }
    }
    trip.route.push_back(trip.destination);

    trip.routed_distance = path->length + snap_out + snap_in;
    const double duration = trip.duration_s();
    trip.mean_speed = duration > 0.0 ? *trip.routed_distance / duration * 3.6 : 0.0;
    return trip;
}

}  // namespace bikevol::ingest
