#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bikevol/core/counts.hpp"
#include "bikevol/core/time.hpp"
#include "bikevol/learners/model.hpp"
#include "bikevol/pipeline/feature_table.hpp"
#include "json.hpp"

namespace bikevol::eval {

enum class Scale { Daily, AADB };
std::string_view to_string(Scale scale);
Scale parse_scale(std::string_view text);

struct StationScore {
    std::string station_id;
    size_t n_test_rows = 0;  // rows (Daily) or station-years (AADB) scored
    double mae = 0.0;
    double smape = 0.0;
};

struct EvaluationReport {
    std::string protocol;  // "logo", "short_term", "ten_day"
    std::string model;
    CountWindow window = CountWindow::FullDay;
    Scale scale = Scale::Daily;
    std::vector<StationScore> stations;
    double mae = 0.0;  // unweighted mean over stations
    double smape = 0.0;
    std::vector<std::string> excluded;  // "station: reason"

    nlohmann::json to_json() const;
    // station_id,n_test_rows,mae,smape,mae_flag,smape_flag; a flag is "above" or "below" when
    // the station is more than one sample standard deviation from the station mean.
    std::string to_csv() const;
};

// Sets the aggregate MAE/SMAPE to the unweighted station means; throws when no station.
void aggregate(EvaluationReport& report);

struct Fold {
    std::vector<std::string> train_stations;
    std::vector<std::string> test_stations;
};
using FoldPlan = std::vector<Fold>;

// LOGO over the long-term stations of `table`, in first-appearance order.
FoldPlan logo_plan(const pipeline::FeatureTable& table);

/// Held-out predictions of one fold, floored at zero (counts are non-negative).
struct HeldOut {
    std::string station_id;
    std::vector<size_t> rows;  // indices into the evaluated table
    std::vector<Date> dates;
    std::vector<double> y;
    std::vector<double> yhat;
    std::vector<size_t> train_rows;
    std::vector<pipeline::TransformAction> fit_log;
};

struct EvalOptions {
    std::uint64_t seed = 0;
    int workers = 0;
    size_t aadb_min_rows = 30;  // station-years with fewer daily rows are left out of AADB
};

struct LogoRun {
    FoldPlan plan;
    std::vector<HeldOut> folds;
    std::vector<std::string> excluded;
    nlohmann::json tuning;  // set when tuning ran outside the loop
};

/// Fits one model per fold on the other long-term stations' rows (preprocessing, selection
/// and nested tuning see training rows only) and predicts the held-out station.
/// Fold seeds derive from (seed, station id).
LogoRun logo_predict(const pipeline::FeatureTable& table, const learners::ModelSpec& spec, const EvalOptions& options);

// Scores held-out predictions at one scale. Stations without scorable rows are excluded.
EvaluationReport score_held_out(const std::vector<HeldOut>& folds, Scale scale, const EvalOptions& options);

EvaluationReport logo_evaluate(const pipeline::FeatureTable& table, const learners::ModelSpec& spec, Scale scale,
                               const EvalOptions& options);

/// One fit on all long-term rows; each short-term station is scored on its Daytime rows.
EvaluationReport shortterm_evaluate(const pipeline::FeatureTable& table, const learners::ModelSpec& spec,
                                    const EvalOptions& options);

/// Partitions rows into k folds, spreading each station's rows evenly (per-station fold
/// counts differ by at most one). Returns the test rows of each fold, ascending. A station
/// with fewer than k rows is split best-effort and noted in `warnings`.
std::vector<std::vector<size_t>> stratified_group_kfold(const pipeline::FeatureTable& table, size_t k,
                                                        std::uint64_t seed,
                                                        std::vector<std::string>* warnings = nullptr);

// Replaces tuning = Outside by a single search over all training rows; returns the spec to
// use inside the loop (tuning None, searched hyperparameters) and the search log.
std::pair<learners::ModelSpec, nlohmann::json> resolve_outside_tuning(const pipeline::FeatureTable& train,
                                                                      const learners::ModelSpec& spec,
                                                                      std::uint64_t seed, int workers);

}  // namespace bikevol::eval
