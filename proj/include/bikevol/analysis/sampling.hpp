#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bikevol/core/rng.hpp"
#include "bikevol/core/time.hpp"
#include "bikevol/eval/evaluate.hpp"
#include "bikevol/eval/metrics.hpp"
#include "bikevol/learners/model.hpp"
#include "bikevol/pipeline/feature_table.hpp"
#include "json.hpp"

namespace bikevol::analysis {

enum class Strategy { OneDay, ThreeDay, SevenDay };
enum class Scenario { FullCity, LocationSpecific, SampleMeanBaseline };
std::string_view to_string(Strategy s);
std::string_view to_string(Scenario s);
Strategy parse_strategy(std::string_view text);
Scenario parse_scenario(std::string_view text);
size_t block_length(Strategy s);

/// Ordered collection sequence over ascending `dates` (one station's rows): positions of the
/// first n_days collected days. OneDay draws distinct days; block strategies draw
/// non-overlapping runs of consecutive calendar days, rejecting overlapping or broken runs
/// (up to 1000 attempts per block), the last block truncated. The days collected after d
/// steps are the first d entries, so collections only grow. Throws ComputeError when no
/// valid block can be placed.
std::vector<size_t> sample_date_sequence(const std::vector<Date>& dates, Strategy strategy, size_t n_days, Rng& rng);

/// Per-row weights for the FullCity scenario. Sampled rows share `weight_share` of the total
/// mass; the mass is scaled to n_other + n_sampled so size-based tree limits keep their meaning.
std::pair<double, double> full_city_weights(size_t n_other, size_t n_sampled, double weight_share);

struct SamplingOptions {
    Strategy strategy = Strategy::OneDay;
    Scenario scenario = Scenario::FullCity;
    size_t max_days = 28;
    size_t reps = 10;
    double weight_share = 0.25;
    std::vector<size_t> days;  // evaluated day counts; empty: 1..max_days (and 0 for FullCity)
    eval::Metric metric = eval::Metric::SMAPE;
    size_t min_test_rows = 30;  // a station participates with >= max_days + min_test_rows rows
    std::uint64_t seed = 0;
    int workers = 0;

    void validate() const;
};

struct CurvePoint {
    size_t days = 0;
    double mean = 0.0;     // over repetitions of the station-mean error
    double ci_half = 0.0;  // 1.96 sd / sqrt(reps)
    std::vector<double> rep_means;
    // station_errors[rep][i] matches `stations[i]` of the curve; NaN when skipped
    std::vector<std::vector<double>> station_errors;
};

struct SamplingCurve {
    std::string model;
    Strategy strategy = Strategy::OneDay;
    Scenario scenario = Scenario::FullCity;
    eval::Metric metric = eval::Metric::SMAPE;
    size_t reps = 0;
    double weight_share = 0.0;
    std::vector<std::string> stations;  // participating
    std::vector<std::string> skipped;
    std::vector<CurvePoint> points;

    nlohmann::json to_json() const;
    // days,mean,ci_low,ci_high
    std::string to_csv() const;
};

/// Sample-count collection simulator: per repetition and participating station, collects
/// d days, trains per scenario and scores the station's remaining rows. FullCity at d = 0
/// reproduces the LOGO fold of that station exactly (same rows, unit weights, same seed).
SamplingCurve simulate_sampling(const pipeline::FeatureTable& table, const learners::ModelSpec& spec,
                                const SamplingOptions& options);

/// FullCity, OneDay, 10 days, 10 repetitions; per-station errors averaged over repetitions.
std::pair<eval::EvaluationReport, eval::EvaluationReport> ten_day_headline(const pipeline::FeatureTable& table,
                                                                           const learners::ModelSpec& spec,
                                                                           std::uint64_t seed, int workers = 0,
                                                                           size_t reps = 10,
                                                                           size_t aadb_min_rows = 30);

}  // namespace bikevol::analysis
