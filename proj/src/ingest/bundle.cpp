#include "bikevol/ingest/bundle.hpp"

#include <algorithm>
#include <unordered_set>

#include "bikevol/core/errors.hpp"

namespace bikevol::ingest {

size_t StreetGraph::add_edge(StreetSegment segment, bool bicycle, double maxspeed,
                             int lane_type) {
    auto node_of = [this](const GeoPoint& p) {
        const auto [it, inserted] = node_index.try_emplace({p.lat, p.lon}, nodes.size());
        if (inserted) nodes.push_back(p);
        return it->second;
    };
    const size_t from = node_of(segment.polyline.front());
    const size_t to = node_of(segment.polyline.back());
    edges.push_back({std::move(segment), from, to, bicycle, maxspeed, lane_type});
    return edges.size() - 1;
}

bool BundleMeta::in_study_period(Date d) const {
    return std::any_of(study_periods.begin(), study_periods.end(),
                       [d](const DateRange& r) { return r.contains(d); });
}

void validate_bundle(const SourceBundle& bundle) {
    const auto& meta = bundle.meta;
    if (meta.study_periods.empty()) throw DataError("bundle declares no study period");
    for (const auto& r : meta.study_periods) {
        if (r.last < r.first) throw DataError("study period ends before it starts");
    }
    auto check_date = [&](Date d, const std::string& what) {
        if (!meta.in_study_period(d)) {
            throw DataError(what + ": date " + format_date(d) + " outside the study periods");
        }
    };

    std::unordered_set<std::string> station_ids;
    for (const auto& s : bundle.stations) {
        if (!station_ids.insert(s.id).second) {
            throw DataError("stations: duplicate station id '" + s.id + "'");
        }
        if (!s.location.valid()) throw DataError("stations: invalid location for '" + s.id + "'");
    }
    for (const auto& c : bundle.counts) {
        if (!station_ids.count(c.station_id)) {
            throw DataError("counts: unknown station '" + c.station_id + "'");
        }
        if (c.count < 0) {
            throw DataError("counts: negative count for '" + c.station_id + "' at " +
                            format_timestamp(c.timestamp));
        }
        check_date(date_of(c.timestamp), "counts '" + c.station_id + "'");
    }

    std::set<Date> weather_dates;
    for (const auto& w : bundle.weather) {
        if (!weather_dates.insert(w.date).second) {
            throw DataError("weather: duplicate date " + format_date(w.date));
        }
        check_date(w.date, "weather");
    }

    std::unordered_set<std::string> area_ids;
    for (const auto& a : bundle.planning_areas) {
        if (!area_ids.insert(a.id).second) {
            throw DataError("planning_areas: duplicate area id '" + a.id + "'");
        }
        if (!(a.area_km2 > 0.0)) throw DataError("planning_areas: non-positive area for '" + a.id + "'");
        if (a.ring.size() < 3) throw DataError("planning_areas: polygon of '" + a.id + "' too small");
    }
    for (const auto& s : bundle.socio) {
        if (!area_ids.count(s.area_id)) {
            throw DataError("socio: unknown planning area '" + s.area_id + "'");
        }
    }
    for (const auto& m : bundle.motorized) {
        check_date(m.date, "motorized '" + m.detector_id + "'");
        if (std::find(kVehicleClasses.begin(), kVehicleClasses.end(), m.vehicle_class) ==
            kVehicleClasses.end()) {
            throw DataError("motorized: unknown vehicle class '" + m.vehicle_class + "'");
        }
    }
    for (const auto& p : bundle.pois) {
        if (std::find(kPoiCategories.begin(), kPoiCategories.end(), p.category) ==
            kPoiCategories.end()) {
            throw DataError("pois: unknown category '" + p.category + "'");
        }
    }

    std::unordered_set<std::string> edge_ids;
    for (const auto& e : bundle.street_graph.edges) {
        if (!edge_ids.insert(e.segment.id).second) {
            throw DataError("street_graph: duplicate segment id '" + e.segment.id + "'");
        }
    }
    for (const auto& s : bundle.strava_segments) {
        if (!edge_ids.count(s.segment_id)) {
            throw DataError("strava_segments: unknown segment '" + s.segment_id + "'");
        }
        check_date(s.date, "strava_segments '" + s.segment_id + "'");
    }
    for (const auto& h : bundle.strava_hexagons) check_date(h.date, "strava_hexagons");

    for (size_t i = 0; i < bundle.snapshots.size(); ++i) {
        const auto& snap = bundle.snapshots[i];
        if (i > 0 && snap.timestamp <= bundle.snapshots[i - 1].timestamp) {
            throw DataError("snapshots: timestamps not strictly increasing at " +
                            format_timestamp(snap.timestamp));
        }
        std::unordered_set<std::string> ids;
        for (const auto& b : snap.bikes) {
            if (!ids.insert(b.bike_id).second) {
                throw DataError("snapshots: bike '" + b.bike_id + "' listed twice at " +
                                format_timestamp(snap.timestamp));
            }
        }
    }
}

int map_socio_year(int study_year, const std::set<int>& available_years) {
    if (study_year == 2022 && available_years.count(2020)) return 2020;
    auto it = available_years.upper_bound(study_year);
    if (it == available_years.begin()) {
        throw ConfigError("no socioeconomic data available for study year " +
                          std::to_string(study_year));
    }
    return *std::prev(it);
}

}  // namespace bikevol::ingest
