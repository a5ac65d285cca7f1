#include <filesystem>
#include <fstream>
#include <sstream>

#include "bikevol/core/errors.hpp"
#include "bikevol/ingest/io.hpp"
#include "bikevol/ingest/synthetic.hpp"
#include "bikevol/ingest/trips.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bikevol;
using namespace bikevol::ingest;
namespace fs = std::filesystem;

namespace {

Timestamp at(int hour, int minute) { return Timestamp(make_date(2019, 5, 2)) + std::chrono::hours(hour) + std::chrono::minutes(minute); }

const GeoPoint kA{52.50, 13.40};
const GeoPoint kB{52.51, 13.42};

std::vector<AvailabilitySnapshot> stream_with_gaps(const std::vector<std::pair<int, int>>& gaps, int minutes) {
    std::vector<AvailabilitySnapshot> out;
    for (int m = 0; m < minutes; ++m) {
        AvailabilitySnapshot s{at(9, m), {}};
        bool absent = false;
        for (auto [a, b] : gaps) absent = absent || (m >= a && m <= b);
        if (!absent) s.bikes.push_back({"b1", m < gaps.front().first ? kA : kB});
        out.push_back(std::move(s));
    }
    return out;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("bikevol_ingest_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

SynthConfig small_city() {
    SynthConfig c;
    c.n_long = 4;
    c.n_short = 2;
    c.n_days = 12;
    c.n_bikes = 20;
    c.n_motor_detectors = 5;
    c.paired_locations = 1;
    return c;
}

}  // namespace

TEST_CASE("reconstruct_trips on hand-traced streams") {
    SUBCASE("never rented") {
        std::vector<AvailabilitySnapshot> s;
        for (int m = 0; m < 10; ++m) s.push_back({at(9, m), {{"b1", kA}}});
        CHECK(reconstruct_trips(s).empty());
    }
    SUBCASE("one gap of fourteen minutes") {
        const auto trips = reconstruct_trips(stream_with_gaps({{1, 14}}, 16));
        REQUIRE(trips.size() == 1);
        CHECK(trips[0].origin == kA);
        CHECK(trips[0].destination == kB);
        CHECK(trips[0].start == at(9, 0));
        CHECK(trips[0].end == at(9, 15));
        CHECK(trips[0].duration_s() == 900.0);
    }
    SUBCASE("two disjoint gaps, chronological") {
        const auto trips = reconstruct_trips(stream_with_gaps({{1, 1}, {3, 4}}, 6));
        REQUIRE(trips.size() == 2);
        CHECK(trips[0].start == at(9, 0));
        CHECK(trips[0].end == at(9, 2));
        CHECK(trips[1].start == at(9, 2));
        CHECK(trips[1].end == at(9, 5));
    }
    SUBCASE("gaps open at either end of the stream are ignored") {
        std::vector<AvailabilitySnapshot> s{{at(9, 0), {}}, {at(9, 1), {{"b1", kA}}}, {at(9, 2), {}}};
        CHECK(reconstruct_trips(s).empty());
    }
    SUBCASE("out-of-order snapshots") {
        std::vector<AvailabilitySnapshot> s{{at(9, 1), {}}, {at(9, 0), {}}};
        CHECK_THROWS_AS(reconstruct_trips(s), DataError);
    }
}

TEST_CASE("reconstruct_trips matches the gap oracle on random streams") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t bikes = 1 + rng.below(6), minutes = 2 + rng.below(60);
        std::vector<AvailabilitySnapshot> snaps;
        for (size_t m = 0; m < minutes; ++m) {
            AvailabilitySnapshot s{at(6, 0) + std::chrono::minutes(m), {}};
            for (size_t b = 0; b < bikes; ++b)
                if (rng.uniform() < 0.6) s.bikes.push_back({"bike" + std::to_string(b), {52.5 + rng.uniform(0, 0.01), 13.4}});
            snaps.push_back(std::move(s));
        }
        const auto expected = oracle::gap_trips(snaps);
        const auto got = reconstruct_trips(snaps);
        REQUIRE(got.size() == expected.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].bike_id == expected[i].bike);
            CHECK(got[i].start.time_since_epoch().count() == expected[i].start);
            CHECK(got[i].end.time_since_epoch().count() == expected[i].end);
            CHECK(got[i].origin == expected[i].from);
            CHECK(got[i].destination == expected[i].to);
        }
    }
}

TEST_CASE("snapshots_from_trips inverts reconstruction") {
    std::vector<Trip> trips(2);
    trips[0] = {"b1", kA, kB, at(9, 3), at(9, 10), {}, {}, {}, false};
    trips[1] = {"b2", kB, kA, at(9, 5), at(9, 8), {}, {}, {}, false};
    const auto snaps = snapshots_from_trips(trips, {{"b1", kA}, {"b2", kB}}, at(9, 0), at(9, 20));
    const auto back = reconstruct_trips(snaps);
    REQUIRE(back.size() == 2);
    CHECK(back[0].bike_id == "b1");
    CHECK(back[0].end == at(9, 10));
    CHECK(back[1].start == at(9, 5));
}

TEST_CASE("route_trip on small graphs") {
    StreetGraph g;
    const GeoPoint a{52.50, 13.40}, b{52.50, 13.41}, c{52.50, 13.42};
    const auto ab = g.add_edge(make_segment("ab", {a, b}), true, 50, 0);
    const auto bc = g.add_edge(make_segment("bc", {b, c}), true, 50, 0);
    Trip t{"x", a, c, at(9, 0), at(9, 10), {}, {}, {}, false};

    SUBCASE("line graph routes through the middle node") {
        const auto r = route_trip(g, t);
        REQUIRE(r.routed());
        CHECK(*r.routed_distance == doctest::Approx(g.edges[ab].segment.length + g.edges[bc].segment.length).epsilon(1e-12));
        CHECK(*r.mean_speed == doctest::Approx(*r.routed_distance / 600.0 * 3.6).epsilon(1e-12));
    }
    SUBCASE("same snapped node: twice the snap distance") {
        const GeoPoint near_a{52.5001, 13.40};
        Trip s = t;
        s.destination = near_a;
        const auto r = route_trip(g, s);
        REQUIRE(r.routed());
        CHECK(*r.routed_distance == doctest::Approx(haversine_distance(near_a, a)).epsilon(1e-9));
        s.origin = a;
        s.destination = a;
        CHECK(*route_trip(g, s).routed_distance == 0.0);
    }
    SUBCASE("square with a forbidden edge takes the detour") {
        StreetGraph sq;
        const GeoPoint p0{52.50, 13.40}, p1{52.50, 13.41}, p2{52.51, 13.41}, p3{52.51, 13.40};
        sq.add_edge(make_segment("01", {p0, p1}), false, 50, 0);
        sq.add_edge(make_segment("12", {p1, p2}), true, 50, 0);
        sq.add_edge(make_segment("23", {p2, p3}), true, 50, 0);
        sq.add_edge(make_segment("30", {p3, p0}), true, 50, 0);
        Trip s{"y", p0, p1, at(9, 0), at(9, 10), {}, {}, {}, false};
        const auto r = route_trip(sq, s);
        REQUIRE(r.routed());
        const auto brute = oracle::brute_shortest(sq, 0, 1);
        REQUIRE(brute);
        CHECK(*r.routed_distance == doctest::Approx(*brute).epsilon(1e-12));
        CHECK(*r.routed_distance > 2.5 * haversine_distance(p0, p1));
    }
    SUBCASE("disconnected endpoints are flagged unroutable") {
        g.add_edge(make_segment("far", {{52.6, 13.6}, {52.6, 13.61}}), true, 50, 0);
        Trip s = t;
        s.destination = {52.6, 13.61};
        const auto r = route_trip(g, s);
        CHECK(r.unroutable);
        CHECK_FALSE(r.routed());
    }
}

TEST_CASE("route_trip equals brute-force shortest simple path") {
    Rng rng(21);
    int routed = 0, unroutable = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = oracle::random_graph(rng, 2 + rng.below(7));
        const GeoPoint o{52.5 + rng.uniform(0, 0.01), 13.4 + rng.uniform(0, 0.015)};
        const GeoPoint d{52.5 + rng.uniform(0, 0.01), 13.4 + rng.uniform(0, 0.015)};
        const auto from = oracle::nearest_bicycle_node(g, o), to = oracle::nearest_bicycle_node(g, d);
        const auto r = route_trip(g, Trip{"t", o, d, at(9, 0), at(9, 30), {}, {}, {}, false});
        const auto best = (from && to) ? oracle::brute_shortest(g, *from, *to) : std::nullopt;
        REQUIRE(r.unroutable == !best.has_value());
        if (!best) {
            ++unroutable;
            continue;
        }
        ++routed;
        const double expected = *best + haversine_distance(o, g.nodes[*from]) + haversine_distance(d, g.nodes[*to]);
        CHECK(*r.routed_distance == doctest::Approx(expected).epsilon(1e-9));
        CHECK(polyline_length(r.route) == doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(routed > 100);
    CHECK(unroutable > 0);
}

TEST_CASE("socio year mapping") {
    CHECK(map_socio_year(2019, {2019, 2020}) == 2019);
    CHECK(map_socio_year(2022, {2019, 2020, 2022}) == 2020);
    CHECK(map_socio_year(2021, {2019, 2020}) == 2020);
    CHECK_THROWS_AS(map_socio_year(2018, {2019, 2020}), ConfigError);
}

TEST_CASE("synthetic city: determinism and degenerate configs") {
    const auto dir1 = scratch("det1"), dir2 = scratch("det2");
    save_bundle(generate_synthetic_city(5, small_city()).bundle, dir1.string());
    save_bundle(generate_synthetic_city(5, small_city()).bundle, dir2.string());
    size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir1)) {
        CHECK(slurp(e.path()) == slurp(dir2 / e.path().filename()));
        ++files;
    }
    CHECK(files >= source_names().size() - 1);

    auto empty = small_city();
    empty.n_days = 0;
    const auto city = generate_synthetic_city(5, empty);
    CHECK(city.bundle.counts.empty());
    CHECK_FALSE(city.bundle.stations.empty());
    CHECK_FALSE(city.bundle.street_graph.edges.empty());
    CHECK_NOTHROW(validate_bundle(city.bundle));

    auto bad = small_city();
    bad.n_long = 2;
    CHECK_THROWS_AS(generate_synthetic_city(5, bad), ConfigError);
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("synthetic counts without noise equal the rounded generative mean") {
    auto cfg = small_city();
    cfg.noise_sd = 0.0;
    cfg.missing_hour_rate = 0.0;
    const auto city = generate_synthetic_city(8, cfg);
    std::map<std::string, std::string> location_of;
    for (const auto& s : city.bundle.stations)
        if (s.kind == StationKind::LongTerm) location_of[s.id] = s.location_id.empty() ? s.id : s.location_id;
    std::map<std::pair<std::string, Date>, std::int64_t> totals;
    for (const auto& o : aggregate_daily(city.bundle.counts, CountWindow::FullDay)) {
        auto it = location_of.find(o.station_id);
        if (it != location_of.end()) totals[{it->second, o.date}] += o.count;
    }
    REQUIRE(totals.size() == static_cast<size_t>(cfg.n_long * cfg.n_days));
    for (const auto& [key, count] : totals) {
        CHECK(count == std::llround(city.params.expected_full_day.at(key)));
    }
}

TEST_CASE("bundle loading: round trip, empty counts, bad rows") {
    const auto dir = scratch("load");
    const auto city = generate_synthetic_city(3, small_city());
    save_bundle(city.bundle, dir.string());
    const auto counts_path = dir / source_file("counts");

    const auto loaded = load_bundle(dir.string());
    CHECK(loaded.counts.size() == city.bundle.counts.size());
    const auto again = scratch("load_again");
    save_bundle(loaded, again.string());
    CHECK(slurp(again / source_file("counts")) == slurp(counts_path));

    {
        std::ofstream out(counts_path, std::ios::trunc);
        out << "station_id,timestamp,count\n";
    }
    CHECK(load_bundle(dir.string()).counts.empty());

    const std::string station = city.bundle.stations.front().id;
    {
        std::ofstream out(counts_path, std::ios::trunc);
        out << "station_id,timestamp,count\n" << station << ",2019-04-02T10:00,5\n" << station << ",2019-04-02T11:00,-3\n";
    }
    try {
        load_bundle(dir.string());
        FAIL("negative count accepted");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("counts_hourly.csv:3") != std::string::npos);
    }

    {
        std::ofstream out(counts_path, std::ios::trunc);
        out << "station,timestamp,count\n";
    }
    CHECK_THROWS_AS(load_bundle(dir.string()), DataError);

    {
        std::ofstream out(counts_path, std::ios::trunc);
        out << "station_id,timestamp,count\nnobody,2019-04-02T10:00,5\n";
    }
    CHECK_THROWS_AS(load_bundle(dir.string()), DataError);
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST_CASE("schemas are published for every source") {
    for (const auto& name : source_names()) CHECK_FALSE(source_schema(name).empty());
    CHECK(source_schema("counts") == std::vector<std::string>{"station_id", "timestamp", "count"});
    CHECK_THROWS_AS(source_file("nope"), ConfigError);
}
