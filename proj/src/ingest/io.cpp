#include "bikevol/ingest/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "bikevol/core/csv.hpp"
#include "bikevol/core/errors.hpp"
#include "json.hpp"

namespace bikevol::ingest {

namespace fs = std::filesystem;
using nlohmann::json;
using csv::format_number;

namespace {

constexpr int kBundleFormatVersion = 1;

template <size_t N>
std::vector<std::string> names(const std::array<std::string_view, N>& items,
                               std::string_view prefix = "", std::string_view suffix = "") {
    std::vector<std::string> out;
    for (auto item : items) out.push_back(std::string(prefix) + std::string(item) + std::string(suffix));
    return out;
}

std::vector<std::string> concat(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

GeoPoint parse_point(double lat, double lon, const csv::Table& t, size_t row) {
    if (std::isnan(lat) || std::isnan(lon)) throw DataError(t.where(row) + ": missing coordinate");
    GeoPoint p{lat, lon};
    if (!p.valid()) throw DataError(t.where(row) + ": coordinates out of range");
    return p;
}

Date parse_date_at(const std::string& text, const csv::Table& t, size_t row) {
    try {
        return parse_date(text);
    } catch (const DataError& e) {
        throw DataError(t.where(row) + ": " + e.what());
    }
}

bool parse_flag(const std::string& text, const csv::Table& t, size_t row) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw DataError(t.where(row) + ": expected 0/1 flag, found '" + text + "'");
}

std::string format_ring(const std::vector<GeoPoint>& ring) {
    std::string out;
    for (const auto& p : ring) {
        if (!out.empty()) out += ';';
        out += format_number(p.lat) + ' ' + format_number(p.lon);
    }
    return out;
}

std::vector<GeoPoint> parse_ring(const std::string& text, const csv::Table& t, size_t row) {
    std::vector<GeoPoint> ring;
    std::stringstream ss(text);
    std::string vertex;
    while (std::getline(ss, vertex, ';')) {
        std::stringstream vs(vertex);
        double lat = NAN, lon = NAN;
        if (!(vs >> lat >> lon)) throw DataError(t.where(row) + ": malformed polygon vertex '" + vertex + "'");
        ring.push_back(parse_point(lat, lon, t, row));
    }
    return ring;
}

template <size_t N>
void read_values(std::array<double, N>& values, const csv::Table& t, size_t row, size_t first_col,
                 bool allow_missing) {
    for (size_t k = 0; k < N; ++k) {
        values[k] = csv::parse_number(t.rows[row][first_col + k], t, row);
        if (!allow_missing && std::isnan(values[k])) {
            throw DataError(t.where(row) + ": missing value in column '" + t.header[first_col + k] + "'");
        }
    }
}

template <size_t N>
void push_values(std::vector<std::string>& fields, const std::array<double, N>& values) {
    for (double v : values) fields.push_back(format_number(v));
}

}  // namespace

const std::vector<std::string>& source_names() {
    static const std::vector<std::string> kNames = {
        "stations", "counts",          "weather",         "planning_areas", "socio",
        "pois",     "motorized",       "holidays",        "strava_segments", "strava_hexagons",
        "street_graph", "snapshots",   "trips"};
    return kNames;
}

std::string source_file(std::string_view source) {
    if (source == "street_graph") return "street_graph.geojson";
    if (source == "snapshots") return "snapshots.ndjson";
    if (source == "counts") return "counts_hourly.csv";
    for (const auto& n : source_names()) {
        if (n == source) return n + ".csv";
    }
    throw ConfigError("unknown source '" + std::string(source) + "'");
}

std::vector<std::string> source_schema(std::string_view source) {
    if (source == "stations") return {"station_id", "lat", "lon", "kind", "installed_year", "location_id"};
    if (source == "counts") return {"station_id", "timestamp", "count"};
    if (source == "weather") return concat({"date"}, names(kWeatherFields));
    if (source == "planning_areas") {
        return concat({"area_id", "area_km2", "polygon"}, names(kLandUseCategories, "landuse_", "_km2"));
    }
    if (source == "socio") return concat({"area_id", "year"}, names(kSocioIndicators));
    if (source == "pois") return {"poi_id", "category", "lat", "lon"};
    if (source == "motorized") {
        return {"detector_id", "lat", "lon", "date", "vehicle_class", "volume", "speed"};
    }
    if (source == "holidays") return {"date", "school", "public"};
    if (source == "strava_segments") return concat({"segment_id", "date"}, names(kStravaFields));
    if (source == "strava_hexagons") return concat({"q", "r", "date"}, names(kStravaFields));
    if (source == "street_graph") return {"geometry:LineString", "id", "bicycle", "maxspeed", "lane_type"};
    if (source == "snapshots") return {"ts", "bikes[].id", "bikes[].lat", "bikes[].lon"};
    if (source == "trips") {
        return {"bike_id", "origin_lat", "origin_lon", "dest_lat", "dest_lon", "start", "end",
                "routed_distance", "mean_speed", "unroutable"};
    }
    throw ConfigError("unknown source '" + std::string(source) + "'");
}

std::vector<HourlyCount> read_hourly_counts(const std::string& path,
                                            const std::vector<Station>* stations) {
    const auto t = csv::read_file(path);
    csv::require_header(t, source_schema("counts"));
    std::vector<HourlyCount> out;
    out.reserve(t.rows.size());
    std::unordered_set<std::string> known;
    if (stations) {
        for (const auto& s : *stations) known.insert(s.id);
    }
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        Timestamp ts;
        try {
            ts = parse_timestamp(r[1]);
        } catch (const DataError& e) {
            throw DataError(t.where(i) + ": " + e.what());
        }
        const auto count = csv::parse_integer(r[2], t, i);
        if (count < 0) throw DataError(t.where(i) + ": negative count " + r[2]);
        if (stations && !known.count(r[0])) {
            throw DataError(t.where(i) + ": unknown station '" + r[0] + "'");
        }
        out.push_back({r[0], ts, count});
    }
    return out;
}

void write_hourly_counts(const std::vector<HourlyCount>& counts, const std::string& path) {
    auto out = open_out(path);
    csv::write_row(out, source_schema("counts"));
    for (const auto& c : counts) {
        csv::write_row(out, {c.station_id, format_timestamp(c.timestamp), std::to_string(c.count)});
    }
}

StreetGraph read_street_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw DataError(path + ": expected a GeoJSON FeatureCollection");
    }
    StreetGraph graph;
    size_t index = 0;
    for (const auto& f : doc["features"]) {
        const std::string where = path + ": feature " + std::to_string(index++);
        try {
            const auto& geom = f.at("geometry");
            if (geom.at("type") != "LineString") throw DataError(where + ": geometry must be a LineString");
            std::vector<GeoPoint> pts;
            for (const auto& c : geom.at("coordinates")) {
                // GeoJSON positions are [lon, lat].
                GeoPoint p{c.at(1).get<double>(), c.at(0).get<double>()};
                if (!p.valid()) throw DataError(where + ": coordinates out of range");
                pts.push_back(p);
            }
            const auto& props = f.at("properties");
            graph.add_edge(make_segment(props.at("id").get<std::string>(), std::move(pts)),
                           props.at("bicycle").get<bool>(), props.value("maxspeed", 50.0),
                           props.value("lane_type", 0));
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return graph;
}

void write_street_graph(const StreetGraph& graph, const std::string& path) {
    json features = json::array();
    for (const auto& e : graph.edges) {
        json coords = json::array();
        for (const auto& p : e.segment.polyline) coords.push_back({p.lon, p.lat});
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                            {"properties",
                             {{"id", e.segment.id},
                              {"bicycle", e.bicycle},
                              {"maxspeed", e.maxspeed},
                              {"lane_type", e.lane_type}}}});
    }
    auto out = open_out(path);
    out << json{{"type", "FeatureCollection"}, {"features", features}}.dump() << '\n';
}

std::vector<AvailabilitySnapshot> read_snapshots(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<AvailabilitySnapshot> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        try {
            const auto obj = json::parse(line);
            AvailabilitySnapshot snap;
            snap.timestamp = parse_timestamp(obj.at("ts").get<std::string>());
            for (const auto& b : obj.at("bikes")) {
                GeoPoint p{b.at("lat").get<double>(), b.at("lon").get<double>()};
                if (!p.valid()) throw DataError("coordinates out of range");
                snap.bikes.push_back({b.at("id").get<std::string>(), p});
            }
            out.push_back(std::move(snap));
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return out;
}

void write_snapshots(const std::vector<AvailabilitySnapshot>& snapshots, const std::string& path) {
    auto out = open_out(path);
    for (const auto& s : snapshots) {
        json bikes = json::array();
        for (const auto& b : s.bikes) {
            bikes.push_back({{"id", b.bike_id}, {"lat", b.position.lat}, {"lon", b.position.lon}});
        }
        out << json{{"ts", format_timestamp(s.timestamp)}, {"bikes", bikes}}.dump() << '\n';
    }
}

std::vector<Trip> read_trips(const std::string& path) {
    const auto t = csv::read_file(path);
    csv::require_header(t, source_schema("trips"));
    std::vector<Trip> out;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        Trip trip;
        trip.bike_id = r[0];
        trip.origin = parse_point(csv::parse_number(r[1], t, i), csv::parse_number(r[2], t, i), t, i);
        trip.destination = parse_point(csv::parse_number(r[3], t, i), csv::parse_number(r[4], t, i), t, i);
        try {
            trip.start = parse_timestamp(r[5]);
            trip.end = parse_timestamp(r[6]);
        } catch (const DataError& e) {
            throw DataError(t.where(i) + ": " + e.what());
        }
        if (trip.end <= trip.start) throw DataError(t.where(i) + ": trip ends before it starts");
        const double dist = csv::parse_number(r[7], t, i);
        const double speed = csv::parse_number(r[8], t, i);
        if (!std::isnan(dist)) trip.routed_distance = dist;
        if (!std::isnan(speed)) trip.mean_speed = speed;
        trip.unroutable = !r[9].empty() && parse_flag(r[9], t, i);
        out.push_back(std::move(trip));
    }
    return out;
}

void write_trips(const std::vector<Trip>& trips, const std::string& path) {
    auto out = open_out(path);
    csv::write_row(out, source_schema("trips"));
    for (const auto& trip : trips) {
        csv::write_row(out, {trip.bike_id, format_number(trip.origin.lat), format_number(trip.origin.lon),
                             format_number(trip.destination.lat), format_number(trip.destination.lon),
                             format_timestamp(trip.start), format_timestamp(trip.end),
                             trip.routed_distance ? format_number(*trip.routed_distance) : "",
                             trip.mean_speed ? format_number(*trip.mean_speed) : "",
                             trip.unroutable ? "1" : "0"});
    }
}

SourceBundle load_bundle(const std::string& directory) {
    const fs::path dir(directory);
    auto path_of = [&](std::string_view source) { return (dir / source_file(source)).string(); };
    auto read = [&](std::string_view source) {
        auto t = csv::read_file(path_of(source));
        csv::require_header(t, source_schema(source));
        return t;
    };

    SourceBundle b;
    {
        const auto manifest_path = (dir / "bundle.json").string();
        std::ifstream in(manifest_path, std::ios::binary);
        if (!in) throw DataError("cannot open '" + manifest_path + "'");
        try {
            const auto m = json::parse(in);
            if (m.at("format_version").get<int>() != kBundleFormatVersion) {
                throw DataError(manifest_path + ": unsupported format_version");
            }
            for (const auto& p : m.at("study_periods")) {
                b.meta.study_periods.push_back({parse_date(p.at("first").get<std::string>()),
                                                parse_date(p.at("last").get<std::string>())});
            }
            b.meta.city_center = make_geo_point(m.at("city_center").at("lat"), m.at("city_center").at("lon"));
            const auto& g = m.at("hex_grid");
            b.meta.hex_grid.origin = make_geo_point(g.at("origin").at("lat"), g.at("origin").at("lon"));
            b.meta.hex_grid.cell_area_km2 = g.at("cell_area_km2").get<double>();
            if (!(b.meta.hex_grid.cell_area_km2 > 0.0)) {
                throw DataError(manifest_path + ": hex cell area must be positive");
            }
        } catch (const json::exception& e) {
            throw DataError(manifest_path + ": " + e.what());
        }
    }

    {
        const auto t = read("stations");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            Station s;
            s.id = r[0];
            s.location = parse_point(csv::parse_number(r[1], t, i), csv::parse_number(r[2], t, i), t, i);
            try {
                s.kind = parse_station_kind(r[3]);
            } catch (const DataError& e) {
                throw DataError(t.where(i) + ": " + e.what());
            }
            s.installed_year = static_cast<int>(csv::parse_integer(r[4], t, i));
            s.location_id = r[5];
            b.stations.push_back(std::move(s));
        }
    }
    b.counts = read_hourly_counts(path_of("counts"), &b.stations);
    {
        const auto t = read("weather");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            WeatherDay w{parse_date_at(t.rows[i][0], t, i), {}};
            read_values(w.values, t, i, 1, false);
            b.weather.push_back(w);
        }
    }
    {
        const auto t = read("planning_areas");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            PlanningArea a;
            a.id = r[0];
            a.area_km2 = csv::parse_number(r[1], t, i);
            a.ring = parse_ring(r[2], t, i);
            read_values(a.landuse_km2, t, i, 3, false);
            b.planning_areas.push_back(std::move(a));
        }
    }
    {
        const auto t = read("socio");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            SocioRecord s{t.rows[i][0], static_cast<int>(csv::parse_integer(t.rows[i][1], t, i)), {}};
            read_values(s.values, t, i, 2, true);
            b.socio.push_back(s);
        }
    }
    {
        const auto t = read("pois");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            b.pois.push_back({r[0], r[1],
                              parse_point(csv::parse_number(r[2], t, i), csv::parse_number(r[3], t, i), t, i)});
        }
    }
    {
        const auto t = read("motorized");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            b.motorized.push_back(
                {r[0], parse_point(csv::parse_number(r[1], t, i), csv::parse_number(r[2], t, i), t, i),
                 parse_date_at(r[3], t, i), r[4], csv::parse_number(r[5], t, i),
                 csv::parse_number(r[6], t, i)});
        }
    }
    {
        const auto t = read("holidays");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            b.holidays[parse_date_at(r[0], t, i)] = {parse_flag(r[1], t, i), parse_flag(r[2], t, i)};
        }
    }
    {
        const auto t = read("strava_segments");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            StravaSegmentDay s{t.rows[i][0], parse_date_at(t.rows[i][1], t, i), {}};
            read_values(s.values, t, i, 2, true);
            b.strava_segments.push_back(std::move(s));
        }
    }
    {
        const auto t = read("strava_hexagons");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            StravaHexDay h{{static_cast<int>(csv::parse_integer(t.rows[i][0], t, i)),
                            static_cast<int>(csv::parse_integer(t.rows[i][1], t, i))},
                           parse_date_at(t.rows[i][2], t, i),
                           {}};
            read_values(h.values, t, i, 3, true);
            b.strava_hexagons.push_back(h);
        }
    }
    b.street_graph = read_street_graph(path_of("street_graph"));
    if (fs::exists(path_of("snapshots"))) b.snapshots = read_snapshots(path_of("snapshots"));
    if (fs::exists(path_of("trips"))) b.trips = read_trips(path_of("trips"));

    validate_bundle(b);
    return b;
}

void save_bundle(const SourceBundle& b, const std::string& directory) {
    const fs::path dir(directory);
    fs::create_directories(dir);
    auto path_of = [&](std::string_view source) { return (dir / source_file(source)).string(); };

    {
        json periods = json::array();
        for (const auto& p : b.meta.study_periods) {
            periods.push_back({{"first", format_date(p.first)}, {"last", format_date(p.last)}});
        }
        json m = {{"format_version", kBundleFormatVersion},
                  {"study_periods", periods},
                  {"city_center", {{"lat", b.meta.city_center.lat}, {"lon", b.meta.city_center.lon}}},
                  {"hex_grid",
                   {{"origin", {{"lat", b.meta.hex_grid.origin.lat}, {"lon", b.meta.hex_grid.origin.lon}}},
                    {"cell_area_km2", b.meta.hex_grid.cell_area_km2}}}};
        auto out = open_out((dir / "bundle.json").string());
        out << m.dump(2) << '\n';
    }
    {
        auto out = open_out(path_of("stations"));
        csv::write_row(out, source_schema("stations"));
        for (const auto& s : b.stations) {
            csv::write_row(out, {s.id, format_number(s.location.lat), format_number(s.location.lon),
                                 std::string(to_string(s.kind)), std::to_string(s.installed_year),
                                 s.location_id});
        }
    }
    write_hourly_counts(b.counts, path_of("counts"));
    {
        auto out = open_out(path_of("weather"));
        csv::write_row(out, source_schema("weather"));
        for (const auto& w : b.weather) {
            std::vector<std::string> f{format_date(w.date)};
            push_values(f, w.values);
            csv::write_row(out, f);
        }
    }
    {
        auto out = open_out(path_of("planning_areas"));
        csv::write_row(out, source_schema("planning_areas"));
        for (const auto& a : b.planning_areas) {
            std::vector<std::string> f{a.id, format_number(a.area_km2), format_ring(a.ring)};
            push_values(f, a.landuse_km2);
            csv::write_row(out, f);
        }
    }
    {
        auto out = open_out(path_of("socio"));
        csv::write_row(out, source_schema("socio"));
        for (const auto& s : b.socio) {
            std::vector<std::string> f{s.area_id, std::to_string(s.year)};
            push_values(f, s.values);
            csv::write_row(out, f);
        }
    }
    {
        auto out = open_out(path_of("pois"));
        csv::write_row(out, source_schema("pois"));
        for (const auto& p : b.pois) {
            csv::write_row(out, {p.id, p.category, format_number(p.location.lat), format_number(p.location.lon)});
        }
    }
    {
        auto out = open_out(path_of("motorized"));
        csv::write_row(out, source_schema("motorized"));
        for (const auto& m : b.motorized) {
            csv::write_row(out, {m.detector_id, format_number(m.location.lat), format_number(m.location.lon),
                                 format_date(m.date), m.vehicle_class, format_number(m.volume),
                                 format_number(m.speed)});
        }
    }
    {
        auto out = open_out(path_of("holidays"));
        csv::write_row(out, source_schema("holidays"));
        for (const auto& [d, h] : b.holidays) {
            csv::write_row(out, {format_date(d), h.school ? "1" : "0", h.public_holiday ? "1" : "0"});
        }
    }
    {
        auto out = open_out(path_of("strava_segments"));
        csv::write_row(out, source_schema("strava_segments"));
        for (const auto& s : b.strava_segments) {
            std::vector<std::string> f{s.segment_id, format_date(s.date)};
            push_values(f, s.values);
            csv::write_row(out, f);
        }
    }
    {
        auto out = open_out(path_of("strava_hexagons"));
        csv::write_row(out, source_schema("strava_hexagons"));
        for (const auto& h : b.strava_hexagons) {
            std::vector<std::string> f{std::to_string(h.cell.q), std::to_string(h.cell.r), format_date(h.date)};
            push_values(f, h.values);
            csv::write_row(out, f);
        }
    }
    write_street_graph(b.street_graph, path_of("street_graph"));
    if (!b.snapshots.empty()) write_snapshots(b.snapshots, path_of("snapshots"));
    if (!b.trips.empty()) write_trips(b.trips, path_of("trips"));
}

}  // namespace bikevol::ingest
