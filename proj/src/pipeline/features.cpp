#include "bikevol/pipeline/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "bikevol/core/errors.hpp"
#include "bikevol/core/parallel.hpp"

namespace bikevol::pipeline {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double min_distance_to_path(std::span<const GeoPoint> path, const GeoPoint& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : path) best = std::min(best, haversine_distance(q, p));
    return best;
}

void check_radii(const std::vector<double>& radii, const char* what) {
    if (radii.empty()) throw ConfigError(std::string(what) + " radii must not be empty");
    for (size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw ConfigError(std::string(what) + " radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) {
            throw ConfigError(std::string(what) + " radii must be strictly increasing");
        }
    }
}

std::vector<double> radii_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " radii must be a list");
    std::vector<double> out;
    for (const auto& v : j) {
        if (v.is_string() && v.get<std::string>() == "city") {
            out.push_back(kCityRadius);
        } else if (v.is_number()) {
            out.push_back(v.get<double>());
        } else {
            throw ConfigError(std::string(what) + " radii take numbers or \"city\"");
        }
    }
    return out;
}

json radii_to_json(const std::vector<double>& radii) {
    json out = json::array();
    for (double r : radii) {
        if (std::isinf(r)) {
            out.push_back("city");
        } else {
            out.push_back(r);
        }
    }
    return out;
}

double mean_or_nan(double sum, size_t n) { return n == 0 ? kNaN : sum / static_cast<double>(n); }

}  // namespace

std::string radius_label(double radius_m) {
    if (std::isinf(radius_m)) return "city";
    if (radius_m == std::floor(radius_m)) return std::to_string(static_cast<long long>(radius_m));
    return std::to_string(radius_m);
}

void FeatureConfig::validate() const {
    check_radii(bikeshare_radii, "bikeshare");
    check_radii(strava_radii, "strava");
    check_radii(poi_radii, "poi");
    if (!(motorized_radius > 0.0) || std::isinf(motorized_radius)) {
        throw ConfigError("motorized radius must be a positive distance");
    }
}

FeatureConfig feature_config_from_json(const json& j) {
    FeatureConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw ConfigError("features config must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "bikeshare_radii") {
            c.bikeshare_radii = radii_from_json(value, "bikeshare");
        } else if (key == "strava_radii") {
            c.strava_radii = radii_from_json(value, "strava");
        } else if (key == "poi_radii") {
            c.poi_radii = radii_from_json(value, "poi");
        } else if (key == "motorized_radius") {
            if (!value.is_number()) throw ConfigError("motorized_radius must be a number");
            c.motorized_radius = value.get<double>();
        } else {
            throw ConfigError("unknown features option '" + key + "'");
        }
    }
    c.validate();
    return c;
}

json to_json(const FeatureConfig& c) {
    return {{"bikeshare_radii", radii_to_json(c.bikeshare_radii)},
            {"strava_radii", radii_to_json(c.strava_radii)},
            {"poi_radii", radii_to_json(c.poi_radii)},
            {"motorized_radius", c.motorized_radius}};
}

// ---- bike sharing ----

PreparedTrip prepare_trip(const ingest::Trip& trip) {
    PreparedTrip p;
    p.origin = trip.origin;
    p.destination = trip.destination;
    p.start_date = date_of(trip.start);
    if (trip.route.size() >= 2) {
        p.path = densify(trip.route, kDensifyStepMeters);
    } else {
        const std::vector<GeoPoint> line{trip.origin, trip.destination};
        p.path = densify(line, kDensifyStepMeters);
    }
    p.min_lat = p.max_lat = p.path.front().lat;
    p.min_lon = p.max_lon = p.path.front().lon;
    for (const auto& q : p.path) {
        p.min_lat = std::min(p.min_lat, q.lat);
        p.max_lat = std::max(p.max_lat, q.lat);
        p.min_lon = std::min(p.min_lon, q.lon);
        p.max_lon = std::max(p.max_lon, q.lon);
    }
    return p;
}

NamedFeatures bikeshare_features(std::span<const PreparedTrip> trips, const GeoPoint& station,
                                 Date date, const std::vector<double>& radii) {
    std::vector<double> pass(radii.size(), 0.0), start(radii.size(), 0.0), end(radii.size(), 0.0);
    double max_finite = 0.0;
    for (double r : radii) {
        if (!std::isinf(r)) max_finite = std::max(max_finite, r);
    }
    for (const auto& t : trips) {
        if (t.start_date != date) continue;
        const double d_origin = haversine_distance(t.origin, station);
        const double d_dest = haversine_distance(t.destination, station);
        // Cheap bounding-box bound: the nearest box point is within a few meters of the
        // true bound at city scale, so a 100 m margin keeps the skip conservative.
        const GeoPoint clamp{std::clamp(station.lat, t.min_lat, t.max_lat),
                             std::clamp(station.lon, t.min_lon, t.max_lon)};
        const double box = haversine_distance(clamp, station);
        const double d_path =
            box > max_finite + 100.0 ? std::numeric_limits<double>::infinity() : min_distance_to_path(t.path, station);
        for (size_t k = 0; k < radii.size(); ++k) {
            const double r = radii[k];
            const bool city = std::isinf(r);
            pass[k] += (city || d_path <= r) ? 1.0 : 0.0;
            start[k] += (city || d_origin <= r) ? 1.0 : 0.0;
            end[k] += (city || d_dest <= r) ? 1.0 : 0.0;
        }
    }
    NamedFeatures out;
    for (const auto& [name, values] :
         {std::pair{"pass", &pass}, std::pair{"start", &start}, std::pair{"end", &end}}) {
        for (size_t k = 0; k < radii.size(); ++k) {
            out.emplace_back(std::string("bikeshare_") + name + "_" + radius_label(radii[k]), (*values)[k]);
        }
    }
    return out;
}

// ---- strava ----

StravaIndex::StravaIndex(const ingest::SourceBundle& bundle) : bundle_(&bundle) {
    std::unordered_map<std::string, size_t> index;
    for (const auto& e : bundle.street_graph.edges) {
        index.emplace(e.segment.id, segment_ids_.size());
        segment_ids_.push_back(e.segment.id);
        segment_paths_.push_back(densify(e.segment.polyline, kDensifyStepMeters));
    }
    for (const auto& s : bundle.strava_segments) {
        const auto it = index.find(s.segment_id);
        if (it == index.end()) throw DataError("strava segment '" + s.segment_id + "' is not in the street graph");
        segment_days_[{s.date, it->second}] = &s;
    }
    for (const auto& h : bundle.strava_hexagons) hex_days_[{h.date, h.cell}] = &h;
}

std::vector<size_t> StravaIndex::segments_within(const GeoPoint& p, double radius_m) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < segment_paths_.size(); ++i) {
        if (std::isinf(radius_m) || min_distance_to_path(segment_paths_[i], p) <= radius_m) out.push_back(i);
    }
    return out;
}

NamedFeatures StravaIndex::features(const GeoPoint& station, Date date,
                                    const std::vector<double>& radii) const {
    std::vector<std::vector<size_t>> sets;
    for (double r : radii) sets.push_back(segments_within(station, r));
    return features(station, date, radii, sets);
}

NamedFeatures StravaIndex::features(const GeoPoint& station, Date date, const std::vector<double>& radii,
                                    const std::vector<std::vector<size_t>>& segment_sets) const {
    constexpr size_t F = ingest::kStravaFields.size();
    NamedFeatures out;
    for (size_t k = 0; k < radii.size(); ++k) {
        std::array<double, F> sum{};
        size_t n = 0;
        for (size_t seg : segment_sets[k]) {
            const auto it = segment_days_.find({date, seg});
            if (it == segment_days_.end()) continue;
            for (size_t f = 0; f < F; ++f) sum[f] += it->second->values[f];
            ++n;
        }
        for (size_t f = 0; f < F; ++f) {
            out.emplace_back("strava_seg_" + std::string(ingest::kStravaFields[f]) + "_" + radius_label(radii[k]),
                             mean_or_nan(sum[f], n));
        }
    }

    const HexCell cell = hex_index(station, bundle_->meta.hex_grid);
    const auto own = hex_days_.find({date, cell});
    for (size_t f = 0; f < F; ++f) {
        out.emplace_back("strava_hex_" + std::string(ingest::kStravaFields[f]),
                         own == hex_days_.end() ? kNaN : own->second->values[f]);
    }
    std::array<double, F> sum{};
    size_t n = 0;
    for (const auto& nb : hex_neighbors(cell)) {
        const auto it = hex_days_.find({date, nb});
        if (it == hex_days_.end()) continue;
        for (size_t f = 0; f < F; ++f) sum[f] += it->second->values[f];
        ++n;
    }
    for (size_t f = 0; f < F; ++f) {
        out.emplace_back("strava_hexnb_" + std::string(ingest::kStravaFields[f]), mean_or_nan(sum[f], n));
    }
    return out;
}

NamedFeatures strava_features(const ingest::SourceBundle& bundle, const GeoPoint& station, Date date,
                              const std::vector<double>& radii) {
    return StravaIndex(bundle).features(station, date, radii);
}

// ---- motorized ----

NamedFeatures motorized_features(std::span<const ingest::MotorizedObservation> observations,
                                 const GeoPoint& station, Date date, double radius_m) {
    constexpr size_t C = ingest::kVehicleClasses.size();
    std::array<double, C> vol_in{}, spd_in{}, vol_all{}, spd_all{};
    std::array<size_t, C> n_in{}, n_all{};
    for (const auto& o : observations) {
        if (o.date != date) continue;
        const auto it = std::find(ingest::kVehicleClasses.begin(), ingest::kVehicleClasses.end(), o.vehicle_class);
        if (it == ingest::kVehicleClasses.end()) continue;
        const auto c = static_cast<size_t>(it - ingest::kVehicleClasses.begin());
        vol_all[c] += o.volume;
        spd_all[c] += o.speed;
        ++n_all[c];
        if (haversine_distance(o.location, station) <= radius_m) {
            vol_in[c] += o.volume;
            spd_in[c] += o.speed;
            ++n_in[c];
        }
    }
    NamedFeatures out;
    const std::string local = radius_label(radius_m);
    for (size_t c = 0; c < C; ++c) {
        const std::string base = "motor_" + std::string(ingest::kVehicleClasses[c]);
        out.emplace_back(base + "_volume_" + local, mean_or_nan(vol_in[c], n_in[c]));
        out.emplace_back(base + "_speed_" + local, mean_or_nan(spd_in[c], n_in[c]));
        out.emplace_back(base + "_volume_city", mean_or_nan(vol_all[c], n_all[c]));
        out.emplace_back(base + "_speed_city", mean_or_nan(spd_all[c], n_all[c]));
    }
    return out;
}

// ---- static ----

const ingest::PlanningArea* containing_area(const ingest::SourceBundle& bundle, const GeoPoint& p) {
    for (const auto& a : bundle.planning_areas) {
        if (polygon_contains(a.ring, p)) return &a;
    }
    const ingest::PlanningArea* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& a : bundle.planning_areas) {
        if (a.ring.empty()) continue;
        GeoPoint c{0, 0};
        for (const auto& q : a.ring) {
            c.lat += q.lat;
            c.lon += q.lon;
        }
        c.lat /= static_cast<double>(a.ring.size());
        c.lon /= static_cast<double>(a.ring.size());
        const double d = haversine_distance(c, p);
        if (d < best_d) {
            best_d = d;
            best = &a;
        }
    }
    return best;
}

NamedFeatures static_features(const ingest::SourceBundle& bundle, const GeoPoint& station, int year,
                              const std::vector<double>& poi_radii) {
    NamedFeatures out;
    out.emplace_back("lat", station.lat);
    out.emplace_back("lon", station.lon);
    out.emplace_back("dist_center_m", haversine_distance(station, bundle.meta.city_center));

    const ingest::StreetEdge* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : bundle.street_graph.edges) {
        const auto path = densify(e.segment.polyline, kDensifyStepMeters);
        const double d = min_distance_to_path(path, station);
        if (d < best) {
            best = d;
            nearest = &e;
        }
    }
    out.emplace_back("maxspeed", nearest ? nearest->maxspeed : kNaN);
    out.emplace_back("lane_type", nearest ? static_cast<double>(nearest->lane_type) : kNaN);

    for (const auto& cat : ingest::kPoiCategories) {
        for (double r : poi_radii) {
            double n = 0.0;
            for (const auto& poi : bundle.pois) {
                if (poi.category == cat && (std::isinf(r) || haversine_distance(poi.location, station) <= r)) n += 1.0;
            }
            out.emplace_back("poi_" + std::string(cat) + "_" + radius_label(r), n);
        }
    }

    const auto* area = containing_area(bundle, station);
    for (size_t k = 0; k < ingest::kLandUseCategories.size(); ++k) {
        const double pct = (area && area->area_km2 > 0.0) ? area->landuse_km2[k] / area->area_km2 * 100.0 : kNaN;
        out.emplace_back("landuse_" + std::string(ingest::kLandUseCategories[k]) + "_pct", pct);
    }

    std::set<int> years;
    for (const auto& s : bundle.socio) years.insert(s.year);
    const ingest::SocioRecord* record = nullptr;
    if (area && !years.empty()) {
        const int mapped = ingest::map_socio_year(year, years);
        for (const auto& s : bundle.socio) {
            if (s.area_id == area->id && s.year == mapped) {
                record = &s;
                break;
            }
        }
    }
    for (size_t k = 0; k < ingest::kSocioIndicators.size(); ++k) {
        out.emplace_back("socio_" + std::string(ingest::kSocioIndicators[k]), record ? record->values[k] : kNaN);
    }
    return out;
}

NamedFeatures weather_features(const ingest::SourceBundle& bundle, Date date) {
    const ingest::WeatherDay* day = nullptr;
    for (const auto& w : bundle.weather) {
        if (w.date == date) {
            day = &w;
            break;
        }
    }
    NamedFeatures out;
    for (size_t k = 0; k < ingest::kWeatherFields.size(); ++k) {
        out.emplace_back("weather_" + std::string(ingest::kWeatherFields[k]), day ? day->values[k] : kNaN);
    }
    return out;
}

NamedFeatures time_holiday_features(Date date, const std::map<Date, ingest::HolidayFlags>& holidays) {
    const unsigned wd = weekday_index(date);
    const auto it = holidays.find(date);
    const bool school = it != holidays.end() && it->second.school;
    const bool pub = it != holidays.end() && it->second.public_holiday;
    return {{"month", static_cast<double>(month_of(date))},
            {"day_of_month", static_cast<double>(day_of_month(date))},
            {"weekday", static_cast<double>(wd)},
            {"weekend", wd >= 5 ? 1.0 : 0.0},
            {"year", static_cast<double>(year_of(date))},
            {"school_holiday", school ? 1.0 : 0.0},
            {"public_holiday", pub ? 1.0 : 0.0}};
}

// ---- assembly ----

namespace {

std::map<std::string, std::set<std::string>> pairing_groups(const ingest::SourceBundle& bundle) {
    std::map<std::string, std::set<std::string>> groups;
    for (const auto& s : bundle.stations) {
        if (!s.location_id.empty()) groups[s.location_id].insert(s.id);
    }
    return groups;
}

FeatureGroup group_of(const std::string& name) {
    const auto starts = [&](std::string_view p) { return name.rfind(p, 0) == 0; };
    if (starts("bikeshare_")) return FeatureGroup::BikeSharing;
    if (starts("strava_")) return FeatureGroup::Crowdsourced;
    if (starts("motor_")) return FeatureGroup::Motorized;
    if (starts("weather_")) return FeatureGroup::Weather;
    if (starts("socio_")) return FeatureGroup::Socioeconomic;
    if (name == "school_holiday" || name == "public_holiday") return FeatureGroup::Holiday;
    if (name == "month" || name == "day_of_month" || name == "weekday" || name == "weekend" || name == "year") {
        return FeatureGroup::Time;
    }
    return FeatureGroup::Infrastructure;
}

}  // namespace

std::vector<CountingLocation> counting_locations(const ingest::SourceBundle& bundle) {
    std::map<std::string, std::vector<const Station*>> members;
    for (const auto& s : bundle.stations) {
        members[s.location_id.empty() ? s.id : s.location_id].push_back(&s);
    }
    std::vector<CountingLocation> out;
    for (const auto& [id, list] : members) {
        CountingLocation loc{id, {0, 0}, list.front()->kind};
        for (const auto* s : list) {
            loc.location.lat += s->location.lat;
            loc.location.lon += s->location.lon;
        }
        loc.location.lat /= static_cast<double>(list.size());
        loc.location.lon /= static_cast<double>(list.size());
        out.push_back(loc);
    }
    return out;
}

std::vector<CountObservation> location_targets(const ingest::SourceBundle& bundle, CountWindow window) {
    return combine_directional_counters(aggregate_daily(bundle.counts, window), pairing_groups(bundle));
}

FeatureTable assemble(const ingest::SourceBundle& bundle, const std::vector<ingest::Trip>& cleaned_trips,
                      CountWindow window, const FeatureConfig& config, int workers) {
    config.validate();
    const auto targets = location_targets(bundle, window);
    const auto locations = counting_locations(bundle);
    std::map<std::string, size_t> loc_index;
    for (size_t i = 0; i < locations.size(); ++i) loc_index[locations[i].id] = i;

    // Targets grouped per location, each list sorted by date.
    std::vector<std::vector<QueryRow>> per_loc(locations.size());
    for (const auto& t : targets) {
        const auto it = loc_index.find(t.station_id);
        if (it == loc_index.end()) throw ComputeError("target for unknown location '" + t.station_id + "'");
        per_loc[it->second].push_back({t.date, static_cast<double>(t.count)});
    }
    for (size_t li = 0; li < per_loc.size(); ++li) {
        for (size_t i = 1; i < per_loc[li].size(); ++i) {
            if (per_loc[li][i].date == per_loc[li][i - 1].date) {
                throw ComputeError("duplicate row for " + locations[li].id + " on " + format_date(per_loc[li][i].date));
            }
        }
    }
    return assemble_for(bundle, cleaned_trips, locations, per_loc, window, config, workers);
}

FeatureTable assemble_for(const ingest::SourceBundle& bundle, const std::vector<ingest::Trip>& cleaned_trips,
                          const std::vector<CountingLocation>& locations,
                          const std::vector<std::vector<QueryRow>>& per_loc, CountWindow window,
                          const FeatureConfig& config, int workers) {
    config.validate();
    if (per_loc.size() != locations.size()) throw PreconditionError("one row list per location expected");

    // Trips and motorized observations per date.
    std::vector<PreparedTrip> prepared(cleaned_trips.size());
    parallel_for(cleaned_trips.size(), workers, [&](size_t i) { prepared[i] = prepare_trip(cleaned_trips[i]); });
    std::stable_sort(prepared.begin(), prepared.end(),
                     [](const PreparedTrip& a, const PreparedTrip& b) { return a.start_date < b.start_date; });
    std::map<Date, std::vector<ingest::MotorizedObservation>> motor_by_date;
    for (const auto& m : bundle.motorized) motor_by_date[m.date].push_back(m);
    std::map<Date, NamedFeatures> weather_by_date;
    for (const auto& list : per_loc) {
        for (const auto& q : list) {
            if (!weather_by_date.count(q.date)) weather_by_date[q.date] = weather_features(bundle, q.date);
        }
    }

    const StravaIndex strava(bundle);
    const auto trips_on = [&](Date d) {
        const auto lo = std::lower_bound(prepared.begin(), prepared.end(), d,
                                         [](const PreparedTrip& t, Date x) { return t.start_date < x; });
        const auto hi = std::upper_bound(prepared.begin(), prepared.end(), d,
                                         [](Date x, const PreparedTrip& t) { return x < t.start_date; });
        return std::span<const PreparedTrip>(&*prepared.begin() + (lo - prepared.begin()),
                                             static_cast<size_t>(hi - lo));
    };

    std::vector<std::vector<NamedFeatures>> rows(locations.size());
    parallel_for(locations.size(), workers, [&](size_t li) {
        const auto& loc = locations[li];
        std::vector<std::vector<size_t>> seg_sets;
        for (double r : config.strava_radii) seg_sets.push_back(strava.segments_within(loc.location, r));
        std::map<int, NamedFeatures> static_by_year;
        for (const auto& t : per_loc[li]) {
            const int year = year_of(t.date);
            if (!static_by_year.count(year)) {
                static_by_year[year] = static_features(bundle, loc.location, year, config.poi_radii);
            }
            NamedFeatures row = time_holiday_features(t.date, bundle.holidays);
            const auto append = [&row](const NamedFeatures& f) { row.insert(row.end(), f.begin(), f.end()); };
            append(weather_by_date.at(t.date));
            append(static_by_year.at(year));
            const auto motor_it = motor_by_date.find(t.date);
            append(motor_it == motor_by_date.end()
                       ? motorized_features({}, loc.location, t.date, config.motorized_radius)
                       : motorized_features(motor_it->second, loc.location, t.date, config.motorized_radius));
            append(bikeshare_features(trips_on(t.date), loc.location, t.date, config.bikeshare_radii));
            append(strava.features(loc.location, t.date, config.strava_radii, seg_sets));
            rows[li].push_back(std::move(row));
        }
    });

    FeatureTable table;
    table.window = window;
    bool first = true;
    for (size_t li = 0; li < locations.size(); ++li) {
        for (size_t k = 0; k < rows[li].size(); ++k) {
            const auto& row = rows[li][k];
            if (first) {
                for (const auto& [name, _] : row) table.columns.push_back({name, group_of(name), {}});
                first = false;
            }
            table.station_ids.push_back(locations[li].id);
            table.station_kinds.push_back(locations[li].kind);
            table.dates.push_back(per_loc[li][k].date);
            table.target.push_back(per_loc[li][k].target);
            for (size_t c = 0; c < row.size(); ++c) table.columns[c].values.push_back(row[c].second);
        }
    }
    if (first) {
        // No targets: still expose the column layout.
        const GeoPoint p = bundle.meta.city_center;
        const Date d = make_date(2019, 1, 1);
        NamedFeatures row = time_holiday_features(d, {});
        for (const auto& f : {weather_features(bundle, d), static_features(bundle, p, 2019, config.poi_radii),
                              motorized_features({}, p, d, config.motorized_radius),
                              bikeshare_features({}, p, d, config.bikeshare_radii),
                              strava.features(p, d, config.strava_radii)}) {
            row.insert(row.end(), f.begin(), f.end());
        }
        for (const auto& [name, _] : row) table.columns.push_back({name, group_of(name), {}});
    }
    table.check_shape();
    return table;
}

}  // namespace bikevol::pipeline
