#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bikevol/eval/metrics.hpp"
#include "bikevol/learners/model.hpp"
#include "bikevol/pipeline/feature_table.hpp"
#include "json.hpp"

namespace bikevol::analysis {

struct GroupScore {
    pipeline::FeatureGroup group;
    size_t n_columns = 0;        // columns of the group in the input table
    size_t n_used_columns = 0;   // of those, columns the fitted models kept (max over folds)
    double gain = 0.0;           // mean over folds of (mean permuted error - baseline error)
    double sd = 0.0;             // sample sd of the per-fold gains
    double ci_low = 0.0;         // gain -/+ 1.96 sd / sqrt(folds)
    double ci_high = 0.0;
    std::vector<double> fold_gains;
};

struct GroupImportance {
    std::string model;
    eval::Metric metric = eval::Metric::MAE;
    size_t n_folds = 0;  // repeats x k
    size_t n_permutations = 0;
    double baseline_error = 0.0;  // mean unpermuted test error over folds
    std::vector<GroupScore> groups;

    nlohmann::json to_json() const;
    // group,n_columns,gain,ci_low,ci_high
    std::string to_csv() const;
};

struct GpiOptions {
    eval::Metric metric = eval::Metric::MAE;
    size_t n_permutations = 100;
    size_t k = 5;
    size_t repeats = 3;
    std::vector<pipeline::FeatureGroup> groups;  // empty: every group present in the table
    std::uint64_t seed = 0;
    int workers = 0;
};

/// Grouped permutation importance over repeated station-stratified k-fold CV. Each
/// replicate applies one shared row permutation to every column of the group.
/// Throws PreconditionError when a requested group has no columns.
GroupImportance grouped_permutation_importance(const pipeline::FeatureTable& table, const learners::ModelSpec& spec,
                                               const GpiOptions& options);

}  // namespace bikevol::analysis
