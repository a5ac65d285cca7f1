#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "bikevol/ingest/bundle.hpp"

namespace bikevol::ingest {

struct SynthConfig {
    int n_long = 20;          // long-term counting locations
    int n_short = 6;          // short-term (7h-19h) locations
    int n_days = 200;         // split evenly across the two study periods
    double extent_km = 10.0;  // side of the square city
    int short_term_days = 10; // count days per short-term location
    int paired_locations = 4; // long-term locations measured by two directional counters
    int n_bikes = 120;
    double trips_per_bike_day = 0.8;
    int n_motor_detectors = 30;
    double noise_sd = 0.12;           // day-level log noise of station counts
    double station_effect_sd = 0.35;  // unexplained per-location log offset
    double missing_hour_rate = 0.01;  // chance a counter-day loses one hour
    GeoPoint center{52.52, 13.405};
};

/// The generative model behind the synthetic counts:
///   log mu(s, d) = intercept + beta_popularity * popularity(s) + station_effect(s)
///                + beta_temperature * (tavg(d) - 12) / 8 + beta_rain * log1p(prcp(d))
///                + beta_weekend * weekend(d) + beta_holiday * public_holiday(d)
///                + season_amplitude * cos(2 pi (doy(d) - 196) / 365.25)
/// FullDay count = round(exp(log mu + noise)), noise ~ N(0, noise_sd^2).
struct GenerativeParams {
    double intercept = std::log(1800.0);
    double beta_popularity = 1.1;
    double beta_temperature = 0.22;
    double beta_rain = -0.18;
    double beta_weekend = -0.3;
    double beta_holiday = -0.25;
    double season_amplitude = 0.12;
    double noise_sd = 0.0;
    std::array<double, 24> hourly_profile{};  // shares summing to 1
    double daytime_share = 0.0;               // share of hours 7..18

    std::map<std::string, double> popularity;      // per location id
    std::map<std::string, double> station_effect;  // per location id
    // Noise-free FullDay mean per (location, date) for every generated count day.
    std::map<std::pair<std::string, Date>, double> expected_full_day;
};

struct SyntheticCity {
    SourceBundle bundle;
    GenerativeParams params;
};

SyntheticCity generate_synthetic_city(std::uint64_t seed, const SynthConfig& config);

}  // namespace bikevol::ingest
