#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bikevol/pipeline/feature_table.hpp"
#include "json.hpp"

namespace bikevol::pipeline {

inline constexpr double kCorrelationThreshold = 0.99;

struct TransformAction {
    enum class Kind { DropCorrelated, DropConstant, Impute };
    Kind kind = Kind::Impute;
    std::string column;
    std::string partner;  // DropCorrelated: the kept column
    std::string station;  // Impute: the station whose cells were filled
    double value = 0.0;   // DropCorrelated: r; Impute: fill value
    size_t cells = 0;     // Impute: cells filled

    friend bool operator==(const TransformAction&, const TransformAction&) = default;
};

std::string_view to_string(TransformAction::Kind kind);

/// Fitted preprocessing: which columns survive and the statistics for imputation.
/// Fitting on training rows and applying to held-out rows keeps test data out of the fit.
struct PreprocessPlan {
    std::vector<std::string> kept_columns;
    std::vector<TransformAction> drops;
    // Per kept column: overall (sum, count) and per-station (sum, count) over non-missing cells.
    std::vector<std::pair<double, size_t>> totals;
    std::vector<std::map<std::string, std::pair<double, size_t>>> per_station;

    // Fill value for a missing cell of kept column k at `station`: the column mean over
    // every other station's rows, or over all rows when no other station has data.
    double fill_value(size_t k, const std::string& station) const;

    nlohmann::json to_json() const;
    static PreprocessPlan from_json(const nlohmann::json& j);
};

PreprocessPlan fit_preprocess(const FeatureTable& table);

/// Keeps the plan's columns (in plan order) and fills missing cells. Impute actions are
/// appended to `log` when given. Throws ComputeError if a kept column is absent.
FeatureTable apply_preprocess(const PreprocessPlan& plan, const FeatureTable& table,
                              std::vector<TransformAction>* log = nullptr);

struct PreprocessResult {
    FeatureTable table;
    std::vector<TransformAction> log;
};

// fit_preprocess + apply_preprocess on the same table; the log lists drops then imputations.
PreprocessResult preprocess(const FeatureTable& table);

nlohmann::json log_to_json(const std::vector<TransformAction>& log);

}  // namespace bikevol::pipeline
