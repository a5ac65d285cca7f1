#include "bikevol/ingest/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bikevol/core/errors.hpp"
#include "bikevol/core/rng.hpp"

namespace bikevol::ingest {

namespace {

constexpr double kMetersPerDegree = kPi / 180.0 * kEarthRadiusMeters;

GeoPoint offset(const GeoPoint& origin, double east_m, double north_m) {
    return {origin.lat + north_m / kMetersPerDegree,
            origin.lon + east_m / (kMetersPerDegree * std::cos(origin.lat * kPi / 180.0))};
}

double round5(double x) { return 5.0 * std::round(x / 5.0); }
double round1(double x) { return std::round(x * 10.0) / 10.0; }

struct Bump {
    double east;
    double north;
    double sigma;
    double height;
};

// Smooth popularity surface: the latent driver of cycling demand across the city.
class PopularityField {
public:
    PopularityField(const GeoPoint& center, double extent_m, Rng& rng) : center_(center) {
        bumps_.push_back({0.0, 0.0, 0.28 * extent_m, 1.0});
        for (int k = 0; k < 3; ++k) {
            bumps_.push_back({rng.uniform(-0.35, 0.35) * extent_m,
                              rng.uniform(-0.35, 0.35) * extent_m,
                              rng.uniform(0.08, 0.16) * extent_m, rng.uniform(0.35, 0.7)});
        }
    }

    double at(const GeoPoint& p) const {
        const double north = (p.lat - center_.lat) * kMetersPerDegree;
        const double east = (p.lon - center_.lon) * kMetersPerDegree *
                            std::cos(center_.lat * kPi / 180.0);
        double v = 0.0;
        for (const auto& b : bumps_) {
            const double dx = east - b.east;
            const double dy = north - b.north;
            v += b.height * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
        }
        return v;
    }

private:
    GeoPoint center_;
    std::vector<Bump> bumps_;
};

std::array<double, 24> hourly_profile() {
    // Commuter double peak on a low night base.
    std::array<double, 24> w{};
    for (int h = 0; h < 24; ++h) {
        const double morning = std::exp(-0.5 * std::pow((h - 8.0) / 1.5, 2));
        const double evening = std::exp(-0.5 * std::pow((h - 17.0) / 2.0, 2));
        const double day = (h >= 6 && h <= 21) ? 0.35 : 0.0;
        w[h] = 0.04 + day + 1.1 * morning + 1.0 * evening;
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return w;
}

// Splits `total` into integer parts proportional to `shares` (largest remainder).
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& shares) {
    const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::vector<std::int64_t> parts(shares.size());
    std::vector<std::pair<double, size_t>> remainders;
    std::int64_t assigned = 0;
    for (size_t i = 0; i < shares.size(); ++i) {
        const double exact = static_cast<double>(total) * shares[i] / sum;
        parts[i] = static_cast<std::int64_t>(std::floor(exact));
        assigned += parts[i];
        remainders.push_back({exact - static_cast<double>(parts[i]), i});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::int64_t k = 0; k < total - assigned; ++k) {
        ++parts[remainders[static_cast<size_t>(k) % remainders.size()].second];
    }
    return parts;
}

int poisson(Rng& rng, double lambda) {
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = rng.uniform();
    while (p > limit) {
        ++k;
        p *= rng.uniform();
    }
    return k;
}

std::map<Date, HolidayFlags> berlin_like_holidays() {
    std::map<Date, HolidayFlags> out;
    auto mark_public = [&](int y, unsigned m, unsigned d) {
        out[make_date(y, m, d)].public_holiday = true;
    };
    auto mark_school = [&](int y, unsigned m1, unsigned d1, unsigned m2, unsigned d2) {
        for (Date d = make_date(y, m1, d1); d <= make_date(y, m2, d2); d += std::chrono::days{1}) {
            out[d].school = true;
        }
    };
    for (int y : {2019, 2022}) {
        mark_public(y, 1, 1);
        mark_public(y, 3, 8);
        mark_public(y, 5, 1);
        mark_public(y, 10, 3);
        mark_public(y, 12, 25);
        mark_public(y, 12, 26);
    }
    mark_public(2019, 4, 19);
    mark_public(2019, 4, 22);
    mark_public(2019, 5, 30);
    mark_public(2019, 6, 10);
    mark_public(2022, 4, 15);
    mark_public(2022, 4, 18);
    mark_public(2022, 5, 26);
    mark_public(2022, 6, 6);
    mark_school(2019, 4, 15, 4, 26);
    mark_school(2019, 6, 20, 8, 2);
    mark_school(2019, 10, 4, 10, 18);
    mark_school(2019, 12, 23, 12, 31);
    mark_school(2022, 7, 7, 8, 19);
    mark_school(2022, 10, 24, 11, 5);
    mark_school(2022, 12, 22, 12, 31);
    return out;
}

}  // namespace

SyntheticCity generate_synthetic_city(std::uint64_t seed, const SynthConfig& config) {
    if (config.n_long < 3) throw ConfigError("synthetic city needs at least 3 long-term stations");
    if (config.n_days < 0 || config.n_short < 0 || config.extent_km <= 0.0) {
        throw ConfigError("synthetic city configuration out of range");
    }
    if (config.paired_locations > config.n_long) {
        throw ConfigError("more paired locations than long-term locations");
    }

    SyntheticCity city;
    auto& bundle = city.bundle;
    auto& params = city.params;
    params.noise_sd = config.noise_sd;
    params.hourly_profile = hourly_profile();
    params.daytime_share = 0.0;
    for (int h = 7; h <= 18; ++h) params.daytime_share += params.hourly_profile[h];

    const double extent_m = config.extent_km * 1000.0;
    const GeoPoint center = config.center;
    auto stream = [&](std::uint64_t key) { return Rng(derive_seed(seed, {key})); };

    // Study periods follow the April-December / June-December two-year shape.
    const DateRange period_a{make_date(2019, 4, 1), make_date(2019, 12, 31)};
    const DateRange period_b{make_date(2022, 6, 1), make_date(2022, 12, 31)};
    bundle.meta.study_periods = {period_a, period_b};
    bundle.meta.city_center = center;
    bundle.meta.hex_grid = HexGrid{center, 0.66};
    const int days_a = (config.n_days + 1) / 2;
    const int days_b = config.n_days - days_a;
    if (days_a > (period_a.last - period_a.first).count() + 1 ||
        days_b > (period_b.last - period_b.first).count() + 1) {
        throw ConfigError("n_days exceeds the study periods");
    }
    std::vector<Date> dates;
    for (int i = 0; i < days_a; ++i) dates.push_back(period_a.first + std::chrono::days{i});
    for (int i = 0; i < days_b; ++i) dates.push_back(period_b.first + std::chrono::days{i});

    Rng field_rng = stream(1);
    const PopularityField field(center, extent_m, field_rng);

    // Weather and holidays drive the shared day effect.
    bundle.holidays = berlin_like_holidays();
    Rng weather_rng = stream(2);
    std::map<Date, double> day_effect;
    for (Date d : dates) {
        WeatherDay w{d, {}};
        const double doy = day_of_year(d);
        const double tavg = 10.0 + 9.0 * std::sin(2.0 * kPi * (doy - 110.0) / 365.25) +
                            3.0 * weather_rng.normal();
        const double wet = weather_rng.uniform();
        const double prcp = wet < 0.55 ? 0.0 : 2.0 * std::exp(weather_rng.normal());
        const double wspd = std::max(0.0, 11.0 + 3.5 * weather_rng.normal());
        w.values = {round1(tavg),
                    round1(tavg - 4.0 - std::abs(2.0 * weather_rng.normal())),
                    round1(tavg + 5.0 + std::abs(2.0 * weather_rng.normal())),
                    round1(prcp),
                    tavg < 0.0 && prcp > 0.0 ? round1(prcp * 3.0) : 0.0,
                    round1(std::clamp(8.0 + 4.0 * std::sin(2.0 * kPi * (doy - 80.0) / 365.25) -
                                          1.5 * prcp + 1.5 * weather_rng.normal(),
                                      0.0, 15.0)),
                    round1(wspd),
                    std::round(weather_rng.uniform(0.0, 360.0)),
                    round1(wspd * 1.8 + 2.0 * std::abs(weather_rng.normal())),
                    round1(1013.0 + 8.0 * weather_rng.normal())};
        bundle.weather.push_back(w);

        const auto hol = bundle.holidays.count(d) ? bundle.holidays.at(d) : HolidayFlags{};
        day_effect[d] = params.beta_temperature * (w.values[0] - 12.0) / 8.0 +
                        params.beta_rain * std::log1p(w.values[3]) +
                        params.beta_weekend * (weekday_index(d) >= 5 ? 1.0 : 0.0) +
                        params.beta_holiday * (hol.public_holiday ? 1.0 : 0.0) +
                        params.season_amplitude * std::cos(2.0 * kPi * (doy - 196.0) / 365.25);
    }

    // Street grid with jittered nodes and a mid-vertex per edge.
    Rng graph_rng = stream(3);
    const int grid_n = std::max(2, static_cast<int>(std::lround(config.extent_km / 0.5)) + 1);
    const double spacing = extent_m / (grid_n - 1);
    std::vector<GeoPoint> grid_nodes;
    for (int j = 0; j < grid_n; ++j) {
        for (int i = 0; i < grid_n; ++i) {
            grid_nodes.push_back(offset(center, -extent_m / 2 + i * spacing + graph_rng.uniform(-40, 40),
                                        -extent_m / 2 + j * spacing + graph_rng.uniform(-40, 40)));
        }
    }
    int edge_counter = 0;
    auto add_street = [&](const GeoPoint& a, const GeoPoint& b) {
        const GeoPoint mid{(a.lat + b.lat) / 2.0, (a.lon + b.lon) / 2.0};
        const GeoPoint bent = offset(mid, graph_rng.uniform(-20, 20), graph_rng.uniform(-20, 20));
        char id[32];
        std::snprintf(id, sizeof id, "seg%05d", edge_counter++);
        const double pop = field.at(mid);
        const bool bicycle = graph_rng.uniform() >= 0.04;
        const double speed_draw = graph_rng.uniform();
        const double maxspeed = speed_draw < 0.4 ? 30.0 : (speed_draw < 0.9 ? 50.0 : 60.0);
        const double lane_draw = graph_rng.uniform() + 0.3 * pop;
        const int lane = lane_draw < 0.45 ? 0 : (lane_draw < 0.8 ? 1 : (lane_draw < 1.05 ? 2 : 3));
        bundle.street_graph.add_edge(make_segment(id, {a, bent, b}), bicycle, maxspeed, lane);
    };
    for (int j = 0; j < grid_n; ++j) {
        for (int i = 0; i < grid_n; ++i) {
            const auto& here = grid_nodes[j * grid_n + i];
            if (i + 1 < grid_n) add_street(here, grid_nodes[j * grid_n + i + 1]);
            if (j + 1 < grid_n) add_street(here, grid_nodes[(j + 1) * grid_n + i]);
        }
    }
    const auto& nodes = bundle.street_graph.nodes;
    std::vector<double> node_weight(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) node_weight[i] = std::exp(1.5 * field.at(nodes[i]));
    std::vector<double> node_cdf(node_weight.size());
    std::partial_sum(node_weight.begin(), node_weight.end(), node_cdf.begin());
    auto draw_node = [&](Rng& rng) {
        const double u = rng.uniform() * node_cdf.back();
        return static_cast<size_t>(std::upper_bound(node_cdf.begin(), node_cdf.end(), u) -
                                   node_cdf.begin());
    };
    auto random_point = [&](Rng& rng, double frac) {
        return offset(center, rng.uniform(-0.5, 0.5) * frac * extent_m,
                      rng.uniform(-0.5, 0.5) * frac * extent_m);
    };

    // Counting stations.
    Rng station_rng = stream(4);
    struct Location {
        std::string id;
        GeoPoint where;
        bool long_term;
    };
    std::vector<Location> locations;
    for (int k = 0; k < config.n_long; ++k) {
        char id[32];
        std::snprintf(id, sizeof id, "L%02d", k);
        const GeoPoint p = random_point(station_rng, 0.85);
        locations.push_back({id, p, true});
        const int installed = 2012 + static_cast<int>(station_rng.below(6));
        if (k < config.paired_locations) {
            for (const char* side : {"a", "b"}) {
                bundle.stations.push_back(
                    {std::string(id) + side, p, StationKind::LongTerm, installed, id});
            }
        } else {
            bundle.stations.push_back({id, p, StationKind::LongTerm, installed, ""});
        }
    }
    for (int k = 0; k < config.n_short; ++k) {
        char id[32];
        std::snprintf(id, sizeof id, "S%02d", k);
        const GeoPoint p = random_point(station_rng, 0.85);
        locations.push_back({id, p, false});
        bundle.stations.push_back({id, p, StationKind::ShortTerm, 2001, ""});
    }
    for (const auto& loc : locations) {
        params.popularity[loc.id] = field.at(loc.where);
        params.station_effect[loc.id] = config.station_effect_sd * station_rng.normal();
    }

    // Counts.
    Rng count_rng = stream(5);
    const std::vector<double> all_hours(params.hourly_profile.begin(), params.hourly_profile.end());
    const std::vector<double> day_hours(params.hourly_profile.begin() + 7,
                                        params.hourly_profile.begin() + 19);
    auto log_mean = [&](const std::string& loc, Date d) {
        return params.intercept + params.beta_popularity * params.popularity.at(loc) +
               params.station_effect.at(loc) + day_effect.at(d);
    };
    auto emit_hours = [&](const std::string& station, Date d, const std::vector<std::int64_t>& per_hour,
                          int first_hour) {
        const bool drop = count_rng.uniform() < config.missing_hour_rate;
        const auto dropped = static_cast<int>(count_rng.below(per_hour.size()));
        for (size_t h = 0; h < per_hour.size(); ++h) {
            if (drop && static_cast<int>(h) == dropped) continue;
            bundle.counts.push_back({station, Timestamp{d} + std::chrono::hours{first_hour + static_cast<int>(h)},
                                     per_hour[h]});
        }
    };
    for (int k = 0; k < config.n_long; ++k) {
        const auto& loc = locations[static_cast<size_t>(k)];
        for (Date d : dates) {
            const double lm = log_mean(loc.id, d);
            params.expected_full_day[{loc.id, d}] = std::exp(lm);
            const auto total =
                static_cast<std::int64_t>(std::llround(std::exp(lm + config.noise_sd * count_rng.normal())));
            const auto per_hour = apportion(total, all_hours);
            if (k < config.paired_locations) {
                std::vector<std::int64_t> side_a(24), side_b(24);
                for (size_t h = 0; h < 24; ++h) {
                    side_a[h] = std::llround(static_cast<double>(per_hour[h]) * 0.55);
                    side_b[h] = per_hour[h] - side_a[h];
                }
                emit_hours(loc.id + "a", d, side_a, 0);
                emit_hours(loc.id + "b", d, side_b, 0);
            } else {
                emit_hours(loc.id, d, per_hour, 0);
            }
        }
    }
    for (int k = 0; k < config.n_short && !dates.empty(); ++k) {
        const auto& loc = locations[static_cast<size_t>(config.n_long + k)];
        std::vector<size_t> order(dates.size());
        std::iota(order.begin(), order.end(), 0);
        count_rng.shuffle(std::span<size_t>(order));
        order.resize(std::min<size_t>(order.size(), static_cast<size_t>(config.short_term_days)));
        std::sort(order.begin(), order.end());
        for (size_t idx : order) {
            const Date d = dates[idx];
            const double lm = log_mean(loc.id, d);
            params.expected_full_day[{loc.id, d}] = std::exp(lm);
            const auto total = static_cast<std::int64_t>(std::llround(
                std::exp(lm + config.noise_sd * count_rng.normal()) * params.daytime_share));
            const auto per_hour = apportion(total, day_hours);
            for (size_t h = 0; h < per_hour.size(); ++h) {
                bundle.counts.push_back({loc.id, Timestamp{d} + std::chrono::hours{7 + static_cast<int>(h)},
                                         per_hour[h]});
            }
        }
    }

    // Planning areas on a regular grid of ~2 km^2 cells, with land use and socio indicators.
    Rng area_rng = stream(6);
    const int area_n = std::max(1, static_cast<int>(std::ceil(config.extent_km / 1.45)));
    const double area_side = extent_m / area_n;
    std::vector<double> area_pop;
    for (int j = 0; j < area_n; ++j) {
        for (int i = 0; i < area_n; ++i) {
            const double west = -extent_m / 2 + i * area_side;
            const double south = -extent_m / 2 + j * area_side;
            PlanningArea area;
            char id[32];
            std::snprintf(id, sizeof id, "PA%02d%02d", j, i);
            area.id = id;
            area.ring = {offset(center, west, south), offset(center, west + area_side, south),
                         offset(center, west + area_side, south + area_side),
                         offset(center, west, south + area_side)};
            area.area_km2 = area_side * area_side / 1e6;
            const double pop = field.at(offset(center, west + area_side / 2, south + area_side / 2));
            area_pop.push_back(pop);
            std::array<double, kLandUseCategories.size()> raw{};
            for (size_t c = 0; c < raw.size(); ++c) raw[c] = area_rng.uniform(0.05, 1.0);
            raw[1] = 0.0;  // horticulture: absent city-wide
            raw[9] += 1.5 * pop;
            raw[0] += std::max(0.0, 0.6 - pop);
            const double s = std::accumulate(raw.begin(), raw.end(), 0.0);
            for (size_t c = 0; c < raw.size(); ++c) {
                area.landuse_km2[c] = std::round(raw[c] / s * 0.92 * area.area_km2 * 1000.0) / 1000.0;
            }
            bundle.planning_areas.push_back(std::move(area));
        }
    }
    // One area published no socioeconomic indicators; pick the area holding location L01.
    std::string silent_area;
    for (const auto& a : bundle.planning_areas) {
        if (polygon_contains(a.ring, locations[1].where)) silent_area = a.id;
    }
    for (size_t a = 0; a < bundle.planning_areas.size(); ++a) {
        if (bundle.planning_areas[a].id == silent_area) continue;
        for (int year : {2019, 2020}) {
            SocioRecord rec{bundle.planning_areas[a].id, year, {}};
            const double pop = area_pop[a];
            const double drift = year == 2020 ? 1.01 : 1.0;
            rec.values = {round1((4000 + 9000 * pop + 800 * area_rng.normal()) * drift),
                          std::round((8000 + 14000 * pop + 1500 * area_rng.normal()) * drift),
                          round1(44 - 6 * pop + area_rng.normal()),
                          round1(50 + area_rng.normal()),
                          round1(20 + 15 * pop + 3 * area_rng.normal()),
                          round1(10 + 10 * pop + 2 * area_rng.normal()),
                          round1(std::max(1.0, 6 + 2 * area_rng.normal())),
                          round1(55 - 10 * pop + 3 * area_rng.normal()),
                          round1(10 + 4 * pop + area_rng.normal()),
                          round1(9 + 4 * pop + area_rng.normal()),
                          round1(16 + 2 * area_rng.normal()),
                          round1(64 + 4 * pop + 2 * area_rng.normal()),
                          round1(20 - 4 * pop + 2 * area_rng.normal()),
                          round1(60 - 15 * pop + 5 * area_rng.normal()),
                          round1(9 + 2 * pop + area_rng.normal())};
            bundle.socio.push_back(rec);
        }
    }

    // Points of interest, denser where the city is popular.
    Rng poi_rng = stream(7);
    for (int k = 0; bundle.pois.size() < 600 && k < 100000; ++k) {
        const GeoPoint p = random_point(poi_rng, 1.0);
        if (poi_rng.uniform() > std::exp(field.at(p) - 1.6)) continue;
        const double c = poi_rng.uniform();
        const char* category = c < 0.6 ? "shop" : (c < 0.82 ? "education" : (c < 0.97 ? "hotel" : "hospital"));
        char id[32];
        std::snprintf(id, sizeof id, "poi%04zu", bundle.pois.size());
        bundle.pois.push_back({id, category, p});
    }

    // Crowdsourced segment and hexagon aggregates, quantized to multiples of five.
    Rng strava_rng = stream(8);
    auto strava_values = [&](double log_level, Date d) {
        std::array<double, kStravaFields.size()> v{};
        const double total = round5(std::exp(log_level + 0.9 * day_effect.at(d) + 0.25 * strava_rng.normal()));
        const bool weekend = weekday_index(d) >= 5;
        const double commute_share = std::clamp((weekend ? 0.2 : 0.45) + 0.05 * strava_rng.normal(), 0.0, 1.0);
        v[0] = total;
        v[1] = round5(total * 0.98);
        v[2] = round5(total * 0.02);
        v[3] = round5(total * commute_share);
        v[4] = round5(total * (1.0 - commute_share));
        v[5] = round5(total * 0.19);
        v[6] = round5(total * 0.21);
        v[7] = round5(total * 0.34);
        v[8] = round5(total * 0.07);
        v[9] = round5(total * 0.76);
        v[10] = round5(total * 0.11);
        v[11] = round5(total * (0.26 + 0.03 * strava_rng.normal()));
        v[12] = round5(total * 0.48);
        v[13] = round5(total * 0.04);
        v[14] = round5(total * 0.1 * strava_rng.uniform());
        v[15] = round5(total * 0.1 * strava_rng.uniform());
        v[16] = round1(21.0 + 1.5 * strava_rng.normal());
        return v;
    };
    std::vector<double> segment_effect(bundle.street_graph.edges.size());
    for (auto& e : segment_effect) e = 0.3 * strava_rng.normal();
    for (Date d : dates) {
        for (size_t e = 0; e < bundle.street_graph.edges.size(); ++e) {
            const auto& edge = bundle.street_graph.edges[e];
            if (!edge.bicycle) continue;
            const double level = std::log(30.0) + 1.3 * field.at(segment_midpoint(edge.segment)) + segment_effect[e];
            auto values = strava_values(level, d);
            if (values[0] <= 0.0) continue;  // no recorded activity that day
            bundle.strava_segments.push_back({edge.segment.id, d, values});
        }
    }
    const HexGrid& grid = bundle.meta.hex_grid;
    std::vector<HexCell> cells;
    const int reach = static_cast<int>(std::ceil(extent_m / grid.edge_length_m())) + 1;
    for (int q = -reach; q <= reach; ++q) {
        for (int r = -reach; r <= reach; ++r) {
            const GeoPoint c = hex_center({q, r}, grid);
            const double north = (c.lat - center.lat) * kMetersPerDegree;
            const double east = (c.lon - center.lon) * kMetersPerDegree * std::cos(center.lat * kPi / 180.0);
            if (std::abs(north) <= extent_m / 2 + grid.edge_length_m() &&
                std::abs(east) <= extent_m / 2 + grid.edge_length_m()) {
                cells.push_back({q, r});
            }
        }
    }
    for (Date d : dates) {
        for (const auto& cell : cells) {
            const double level = std::log(150.0) + 1.3 * field.at(hex_center(cell, grid));
            bundle.strava_hexagons.push_back({cell, d, strava_values(level, d)});
        }
    }

    // Motorized traffic detectors.
    Rng motor_rng = stream(9);
    std::vector<std::pair<std::string, GeoPoint>> detectors;
    for (int k = 0; k < config.n_motor_detectors; ++k) {
        char id[32];
        std::snprintf(id, sizeof id, "MD%03d", k);
        detectors.push_back({id, random_point(motor_rng, 1.0)});
    }
    for (Date d : dates) {
        const bool weekend = weekday_index(d) >= 5;
        for (const auto& [id, where] : detectors) {
            if (motor_rng.uniform() < 0.05) continue;
            const double pop = field.at(where);
            const double all = std::round(std::exp(std::log(9000.0) + 0.6 * pop - (weekend ? 0.35 : 0.0) +
                                                   0.1 * motor_rng.normal()));
            const double car = std::round(all * 0.88);
            const double speed = round1(45.0 - 8.0 * pop + 3.0 * motor_rng.normal());
            bundle.motorized.push_back({id, where, d, "all", all, speed});
            bundle.motorized.push_back({id, where, d, "car", car, round1(speed + 2.0)});
            bundle.motorized.push_back({id, where, d, "lorry", all - car, round1(speed - 5.0)});
        }
    }

    // Free-floating bike-share rentals.
    Rng trip_rng = stream(10);
    std::vector<GeoPoint> bike_at(static_cast<size_t>(config.n_bikes));
    for (auto& p : bike_at) p = nodes[draw_node(trip_rng)];
    std::vector<Timestamp> bike_free(bike_at.size(), Timestamp{});
    for (Date d : dates) {
        const double lambda = config.trips_per_bike_day * std::exp(0.6 * day_effect.at(d));
        for (int b = 0; b < config.n_bikes; ++b) {
            const int k = poisson(trip_rng, lambda);
            std::vector<int> starts;
            for (int t = 0; t < k; ++t) starts.push_back(360 + static_cast<int>(trip_rng.below(17 * 60)));
            std::sort(starts.begin(), starts.end());
            Timestamp& free_from = bike_free[static_cast<size_t>(b)];
            char bike_id[32];
            std::snprintf(bike_id, sizeof bike_id, "B%04d", b);
            for (int minute : starts) {
                Timestamp start = std::max(Timestamp{d} + std::chrono::minutes{minute},
                                           free_from + std::chrono::minutes{5});
                auto& where = bike_at[static_cast<size_t>(b)];
                GeoPoint dest = nodes[draw_node(trip_rng)];
                const double anomaly = trip_rng.uniform();
                if (anomaly < 0.01) dest = offset(where, 30.0, 20.0);
                dest = offset(dest, trip_rng.uniform(-30, 30), trip_rng.uniform(-30, 30));
                const double dist = 1.3 * haversine_distance(where, dest);
                double speed_kmh = trip_rng.uniform(8.0, 16.0);
                if (anomaly >= 0.01 && anomaly < 0.02) speed_kmh = 60.0;
                auto minutes = std::max<long long>(1, std::llround(dist / (speed_kmh / 3.6) / 60.0));
                if (anomaly >= 0.02 && anomaly < 0.025) minutes = 660;
                const Timestamp end = start + std::chrono::minutes{minutes};
                bundle.trips.push_back({bike_id, where, dest, start, end, {}, {}, {}, false});
                where = dest;
                free_from = end;
            }
        }
    }
    std::stable_sort(bundle.trips.begin(), bundle.trips.end(), [](const Trip& a, const Trip& b) {
        return std::tie(a.start, a.bike_id) < std::tie(b.start, b.bike_id);
    });
    // Trips running past the last study day are cut from the feed.
    std::erase_if(bundle.trips, [&](const Trip& t) { return !bundle.meta.in_study_period(date_of(t.end)); });

    return city;
}

}  // namespace bikevol::ingest
