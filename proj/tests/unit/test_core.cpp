#include <atomic>
#include <cmath>
#include <sstream>

#include "bikevol/core/counts.hpp"
#include "bikevol/core/csv.hpp"
#include "bikevol/core/errors.hpp"
#include "bikevol/core/geo.hpp"
#include "bikevol/core/hexgrid.hpp"
#include "bikevol/core/parallel.hpp"
#include "bikevol/core/rng.hpp"
#include "bikevol/core/time.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bikevol;

namespace {

double meters_per_degree_lat() { return kEarthRadiusMeters * kPi / 180.0; }

std::vector<HourlyCount> day_of(const std::string& station, Date d, const std::vector<int>& hours,
                                std::int64_t (*value)(int)) {
    std::vector<HourlyCount> out;
    for (int h : hours) out.push_back({station, Timestamp(d) + std::chrono::hours(h), value(h)});
    return out;
}

std::vector<int> all_hours() {
    std::vector<int> h(24);
    for (int i = 0; i < 24; ++i) h[i] = i;
    return h;
}

}  // namespace

TEST_CASE("haversine identity, known span and antipode") {
    const GeoPoint berlin{52.52, 13.405};
    CHECK(haversine_distance(berlin, berlin) == 0.0);
    const GeoPoint east{52.52, 14.405};
    const double d = haversine_distance(berlin, east);
    CHECK(d == doctest::Approx(67'700).epsilon(200.0 / 67'700));
    CHECK(d == doctest::Approx(oracle::cosine_law_distance(berlin, east)).epsilon(1e-6));
    CHECK(haversine_distance({0, 0}, {0, 180}) == doctest::Approx(kPi * kEarthRadiusMeters).epsilon(1e-9));
}

TEST_CASE("haversine symmetry and triangle inequality over random triples") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        auto pick = [&] { return GeoPoint{rng.uniform(-89, 89), rng.uniform(-179, 179)}; };
        const auto a = pick(), b = pick(), c = pick();
        CHECK(haversine_distance(a, b) == haversine_distance(b, a));
        CHECK(haversine_distance(a, b) >= 0.0);
        CHECK(haversine_distance(a, c) <= haversine_distance(a, b) + haversine_distance(b, c) + 1e-6);
    }
}

TEST_CASE("make_geo_point rejects out-of-range coordinates") {
    CHECK_THROWS_AS(make_geo_point(91, 0), DataError);
    CHECK_THROWS_AS(make_geo_point(0, -181), DataError);
    CHECK(make_geo_point(-90, 180).valid());
}

TEST_CASE("segment length matches the sum of haversine legs") {
    const auto s = make_segment("s", {{52.5, 13.4}, {52.51, 13.4}, {52.51, 13.42}});
    CHECK(s.length == doctest::Approx(haversine_distance({52.5, 13.4}, {52.51, 13.4}) +
                                      haversine_distance({52.51, 13.4}, {52.51, 13.42}))
                          .epsilon(1e-6));
    CHECK_THROWS_AS(make_segment("bad", {{52.5, 13.4}}), DataError);
}

TEST_CASE("segment midpoint") {
    SUBCASE("two points: arithmetic midpoint") {
        const auto m = segment_midpoint(make_segment("a", {{52.5, 13.4}, {52.5, 13.42}}));
        CHECK(m.lat == doctest::Approx(52.5).epsilon(1e-12));
        CHECK(m.lon == doctest::Approx(13.41).epsilon(1e-9));
    }
    SUBCASE("three collinear equally spaced points: the middle one") {
        const auto m = segment_midpoint(make_segment("b", {{52.5, 13.4}, {52.51, 13.4}, {52.52, 13.4}}));
        CHECK(m.lat == doctest::Approx(52.51).epsilon(1e-9));
        CHECK(m.lon == doctest::Approx(13.4).epsilon(1e-12));
    }
    SUBCASE("L shape 300 m + 100 m: 200 m along the first leg") {
        const GeoPoint a{52.5, 13.4};
        const GeoPoint corner{a.lat + 300.0 / meters_per_degree_lat(), a.lon};
        const double m_per_lon = meters_per_degree_lat() * std::cos(corner.lat * kPi / 180);
        const GeoPoint end{corner.lat, corner.lon + 100.0 / m_per_lon};
        const auto m = segment_midpoint(make_segment("l", {a, corner, end}));
        CHECK(m.lon == doctest::Approx(a.lon).epsilon(1e-12));
        CHECK(haversine_distance(a, m) == doctest::Approx(200.0).epsilon(1e-3));
    }
}

TEST_CASE("polyline radius test uses densified vertices") {
    // A long straight edge passing 100 m from the center, with no vertex nearby.
    const GeoPoint center{52.5, 13.4};
    const double dlat = 100.0 / meters_per_degree_lat();
    const std::vector<GeoPoint> line{{center.lat + dlat, 13.3}, {center.lat + dlat, 13.5}};
    CHECK(polyline_within_radius(line, center, 120.0));
    CHECK_FALSE(polyline_within_radius(line, center, 80.0));
}

TEST_CASE("polygon containment") {
    const std::vector<GeoPoint> square{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    CHECK(polygon_contains(square, {0.5, 0.5}));
    CHECK_FALSE(polygon_contains(square, {1.5, 0.5}));
}

TEST_CASE("hex grid geometry from the cell area") {
    const HexGrid grid{{52.52, 13.405}, 0.66};
    // A = 3 sqrt(3) / 2 s^2 with A = 660,000 m^2.
    const double s = std::sqrt(2.0 * 660'000.0 / (3.0 * std::sqrt(3.0)));
    CHECK(grid.edge_length_m() == doctest::Approx(s).epsilon(1e-12));
    CHECK(grid.inradius_m() == doctest::Approx(436.0).epsilon(1.0 / 436.0));
    CHECK_THROWS_AS(hex_index({52.5, 13.4}, HexGrid{{52.52, 13.405}, 0.0}), ConfigError);
}

TEST_CASE("hex index: origin, nearby points, neighbors") {
    const HexGrid grid{{52.52, 13.405}, 0.66};
    CHECK(hex_index(grid.origin, grid) == HexCell{0, 0});
    const double m_per_lon = meters_per_degree_lat() * std::cos(grid.origin.lat * kPi / 180);
    CHECK(hex_index({grid.origin.lat, grid.origin.lon + 10.0 / m_per_lon}, grid) == HexCell{0, 0});

    const auto nb = hex_neighbors({0, 0});
    std::set<HexCell> distinct(nb.begin(), nb.end());
    CHECK(distinct.size() == 6);
    CHECK_FALSE(distinct.count({0, 0}));
    for (const auto& c : nb) {
        const auto back = hex_neighbors(c);
        CHECK(std::find(back.begin(), back.end(), HexCell{0, 0}) != back.end());
    }
}

TEST_CASE("hex index agrees with the nearest cell center") {
    const HexGrid grid{{52.52, 13.405}, 0.66};
    Rng rng(3);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint p{52.52 + rng.uniform(-0.05, 0.05), 13.405 + rng.uniform(-0.08, 0.08)};
        const auto c = hex_index(p, grid);
        CHECK(hex_index(hex_center(c, grid), grid) == c);
        const double own = haversine_distance(p, hex_center(c, grid));
        double nearest_other = 1e300;
        for (const auto& n : hex_neighbors(c)) nearest_other = std::min(nearest_other, haversine_distance(p, hex_center(n, grid)));
        if (std::fabs(own - nearest_other) < 1.0) continue;  // too close to a border to call
        CHECK(own < nearest_other);
        ++checked;
    }
    CHECK(checked > 1900);
}

TEST_CASE("aggregate_daily windows") {
    const Date d = make_date(2019, 5, 6);
    SUBCASE("constant series") {
        const auto h = day_of("A", d, all_hours(), [](int) -> std::int64_t { return 10; });
        CHECK(aggregate_daily(h, CountWindow::FullDay).at(0).count == 240);
        CHECK(aggregate_daily(h, CountWindow::Daytime).at(0).count == 120);
    }
    SUBCASE("arithmetic series") {
        const auto h = day_of("A", d, all_hours(), [](int hour) -> std::int64_t { return hour; });
        CHECK(aggregate_daily(h, CountWindow::FullDay).at(0).count == 276);
        CHECK(aggregate_daily(h, CountWindow::Daytime).at(0).count == 150);
    }
    SUBCASE("a missing hour drops the day") {
        auto hours = all_hours();
        hours.erase(hours.begin() + 13);
        const auto h = day_of("A", d, hours, [](int) -> std::int64_t { return 5; });
        CHECK(aggregate_daily(h, CountWindow::FullDay).empty());
        CHECK(aggregate_daily(h, CountWindow::Daytime).empty());
    }
    SUBCASE("a night hour missing only drops FullDay") {
        auto hours = all_hours();
        hours.erase(hours.begin() + 2);
        const auto h = day_of("A", d, hours, [](int) -> std::int64_t { return 5; });
        CHECK(aggregate_daily(h, CountWindow::FullDay).empty());
        CHECK(aggregate_daily(h, CountWindow::Daytime).size() == 1);
    }
    SUBCASE("duplicates are data errors") {
        auto h = day_of("A", d, all_hours(), [](int) -> std::int64_t { return 1; });
        h.push_back(h[3]);
        CHECK_THROWS_AS(aggregate_daily(h, CountWindow::FullDay), DataError);
    }
}

TEST_CASE("FullDay is never below Daytime") {
    Rng rng(5);
    std::vector<HourlyCount> h;
    for (int s = 0; s < 4; ++s)
        for (int day = 0; day < 20; ++day)
            for (int hour = 0; hour < 24; ++hour) {
                if (rng.uniform() < 0.02) continue;
                h.push_back({"S" + std::to_string(s), Timestamp(make_date(2019, 6, 1) + std::chrono::days(day)) + std::chrono::hours(hour),
                             static_cast<std::int64_t>(rng.below(50))});
            }
    const auto full = aggregate_daily(h, CountWindow::FullDay);
    const auto day = aggregate_daily(h, CountWindow::Daytime);
    std::map<std::pair<std::string, Date>, std::int64_t> dmap;
    for (const auto& o : day) dmap[{o.station_id, o.date}] = o.count;
    size_t both = 0;
    for (const auto& o : full) {
        auto it = dmap.find({o.station_id, o.date});
        if (it == dmap.end()) continue;
        CHECK(o.count >= it->second);
        ++both;
    }
    CHECK(both > 0);
}

TEST_CASE("combine_directional_counters") {
    const Date d0 = make_date(2019, 4, 1), d1 = d0 + std::chrono::days(1), d2 = d0 + std::chrono::days(2);
    const std::map<std::string, std::set<std::string>> pairing{{"L", {"A", "A2"}}};
    auto obs = [](std::string s, Date d, std::int64_t c) { return CountObservation{std::move(s), d, CountWindow::FullDay, c}; };

    SUBCASE("pair sum and singleton passthrough") {
        const auto out = combine_directional_counters({obs("A", d0, 120), obs("A2", d0, 80), obs("B", d0, 50)}, pairing);
        REQUIRE(out.size() == 2);
        std::map<std::string, std::int64_t> by;
        for (const auto& o : out) by[o.station_id] = o.count;
        CHECK(by["L"] == 200);
        CHECK(by["B"] == 50);
    }
    SUBCASE("three-day calendar: only complete days survive") {
        // Every presence pattern of the two members over three days.
        for (int mask = 0; mask < 64; ++mask) {
            std::vector<CountObservation> in;
            const Date days[3] = {d0, d1, d2};
            std::set<Date> complete;
            for (int k = 0; k < 3; ++k) {
                const bool a = mask & (1 << k), b = mask & (1 << (k + 3));
                if (a) in.push_back(obs("A", days[k], 10 + k));
                if (b) in.push_back(obs("A2", days[k], 20 + k));
                if (a && b) complete.insert(days[k]);
            }
            const auto out = combine_directional_counters(in, pairing);
            std::set<Date> got;
            for (const auto& o : out) {
                got.insert(o.date);
                const int k = static_cast<int>((o.date - d0).count());
                CHECK(o.count == 30 + 2 * k);
            }
            CHECK(got == complete);
        }
    }
    SUBCASE("mismatched windows are configuration errors") {
        auto b = obs("A2", d0, 80);
        b.window = CountWindow::Daytime;
        CHECK_THROWS_AS(combine_directional_counters({obs("A", d0, 120), b}, pairing), ConfigError);
    }
}

TEST_CASE("combine preserves the total over complete dates") {
    Rng rng(9);
    const std::map<std::string, std::set<std::string>> pairing{{"L1", {"a", "b"}}, {"L2", {"c", "d", "e"}}};
    std::vector<CountObservation> in;
    for (const char* s : {"a", "b", "c", "d", "e", "f"})
        for (int day = 0; day < 30; ++day)
            if (rng.uniform() < 0.85)
                in.push_back({s, make_date(2019, 7, 1) + std::chrono::days(day), CountWindow::FullDay,
                              static_cast<std::int64_t>(rng.below(1000))});
    std::map<std::pair<std::string, Date>, std::int64_t> v;
    for (const auto& o : in) v[{o.station_id, o.date}] = o.count;
    std::int64_t expected = 0;
    for (int day = 0; day < 30; ++day) {
        const Date d = make_date(2019, 7, 1) + std::chrono::days(day);
        for (const auto& [loc, members] : pairing) {
            bool all = true;
            std::int64_t sum = 0;
            for (const auto& m : members) {
                auto it = v.find({m, d});
                if (it == v.end()) all = false;
                else sum += it->second;
            }
            if (all) expected += sum;
        }
        if (v.count({"f", d})) expected += v[{"f", d}];
    }
    std::int64_t got = 0;
    for (const auto& o : combine_directional_counters(in, pairing)) got += o.count;
    CHECK(got == expected);
}

TEST_CASE("dates and timestamps") {
    CHECK(format_date(parse_date("2022-06-30")) == "2022-06-30");
    CHECK_THROWS_AS(parse_date("2022-02-30"), DataError);
    CHECK_THROWS_AS(parse_date("2022-6-3"), DataError);
    CHECK(format_timestamp(parse_timestamp("2019-04-01 09:15")) == format_timestamp(parse_timestamp("2019-04-01T09:15:00")));
    CHECK(weekday_index(make_date(2019, 4, 1)) == 0);  // a Monday
    CHECK(weekday_index(make_date(2022, 6, 4)) == 5);  // a Saturday
    CHECK(day_of_year(make_date(2020, 12, 31)) == 366);
}

TEST_CASE("csv quoting round-trip and shortest number formatting") {
    std::ostringstream out;
    csv::write_row(out, {"a", "b,c", "say \"hi\"", ""});
    csv::write_row(out, {"1", "2", "3", "4"});
    std::istringstream in("x,y,z,w\n" + out.str());
    const auto t = csv::parse(in, "mem.csv");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "b,c");
    CHECK(t.rows[0][2] == "say \"hi\"");
    CHECK(t.where(1) == "mem.csv:3");
    CHECK_THROWS_AS(t.column("nope"), DataError);

    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10);
        CHECK(std::stod(csv::format_number(v)) == v);
    }
    CHECK(csv::format_number(std::nan("")) == "");
}

TEST_CASE("derived seeds and the random stream are stable") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(r.below(13) < 13);
    }
}

TEST_CASE("parallel_for fills every slot and surfaces the lowest failing index") {
    std::vector<int> slots(500, 0);
    parallel_for(slots.size(), 4, [&](size_t i) { slots[i] = static_cast<int>(i) * 2; });
    for (size_t i = 0; i < slots.size(); ++i) CHECK(slots[i] == static_cast<int>(i) * 2);

    std::atomic<int> inner{0};
    parallel_for(8, 4, [&](size_t) { parallel_for(8, 4, [&](size_t) { ++inner; }); });
    CHECK(inner == 64);

    try {
        parallel_for(100, 4, [](size_t i) {
            if (i == 17 || i == 60) throw ComputeError("item " + std::to_string(i));
        });
        FAIL("expected a throw");
    } catch (const ComputeError& e) {
        CHECK(std::string(e.what()) == "item 17");
    }
}
