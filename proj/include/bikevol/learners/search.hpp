#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bikevol/core/rng.hpp"
#include "bikevol/learners/estimator.hpp"
#include "json.hpp"

namespace bikevol::learners {

/// Splits rows into k validation folds so every group's rows share one fold. Groups are
/// shuffled with `seed` and dealt round-robin. With fewer groups than k, k shrinks to the
/// group count; fewer than two groups is a ComputeError.
std::vector<std::vector<size_t>> group_kfold(std::span<const std::string> groups, size_t k,
                                             std::uint64_t seed);

double mean_absolute_error(std::span<const double> y, std::span<const double> yhat);

/// Mean over validation folds of the pooled MAE on the fold's rows.
double grouped_cv_mae(EstimatorKind kind, const nlohmann::json& hyperparameters, const DataView& x,
                      std::span<const double> y, std::span<const double> weights,
                      std::span<const std::string> groups, size_t k, std::uint64_t seed);

/// Search space: parameter -> {"type": "uniform"|"log_uniform"|"int_uniform", "low", "high"}
/// or {"type": "categorical", "values": [...]}. Throws ConfigError when malformed.
void validate_search_space(const nlohmann::json& space);
nlohmann::json sample_parameters(const nlohmann::json& space, Rng& rng);

struct TrialRecord {
    size_t index = 0;
    nlohmann::json parameters;
    bool ok = false;
    double cv_mae = 0.0;
    std::string error;
};

struct SearchResult {
    nlohmann::json best;
    double best_cv_mae = 0.0;
    std::vector<TrialRecord> trials;

    nlohmann::json to_json() const;
};

/// Draws n_iter configurations (trial t uses the stream derive_seed(seed, {t})) and scores
/// each by grouped k-fold MAE. Failed trials are logged and skipped; if all fail, throws
/// ComputeError. Ties go to the earliest trial.
SearchResult random_search(EstimatorKind kind, const nlohmann::json& space, size_t n_iter, const DataView& x,
                           std::span<const double> y, std::span<const double> weights,
                           std::span<const std::string> groups, size_t k_folds, std::uint64_t seed,
                           int workers = 0);

}  // namespace bikevol::learners
