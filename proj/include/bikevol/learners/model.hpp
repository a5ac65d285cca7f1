#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bikevol/learners/estimator.hpp"
#include "bikevol/learners/search.hpp"
#include "bikevol/learners/selection.hpp"
#include "bikevol/pipeline/preprocess.hpp"
#include "json.hpp"

namespace bikevol::learners {

// Where hyperparameter search runs relative to an evaluation loop.
enum class TuningMode { None, Nested, Outside };
std::string_view to_string(TuningMode mode);
TuningMode parse_tuning_mode(std::string_view text);

/// Everything needed to turn a training table into a fitted model.
struct ModelSpec {
    EstimatorKind kind = EstimatorKind::RegularizedBoosting;
    nlohmann::json hyperparameters = nlohmann::json::object();
    SelectionMethod selection = SelectionMethod::None;
    size_t selection_k = 40;
    EstimatorKind sequential_evaluator = EstimatorKind::Linear;
    size_t selection_folds = 5;
    TuningMode tuning = TuningMode::None;
    size_t tuning_iter = 10;
    size_t tuning_folds = 3;
    nlohmann::json search_space;  // null: the shipped space for `kind`
    bool preprocess = true;

    // Shipped defaults for `kind`: its feature-selection method and k, nested tuning.
    static ModelSpec defaults_for(EstimatorKind kind);
    // Missing keys keep the defaults of the given kind; unknown keys are ConfigErrors.
    static ModelSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
};

/// Preprocessing plan + selected columns + estimator, fitted on one training table.
struct FittedModel {
    pipeline::PreprocessPlan plan;
    bool preprocessed = true;
    std::vector<std::string> selected;
    std::unique_ptr<Estimator> estimator;
    std::vector<pipeline::TransformAction> fit_log;  // drops and imputations on the training rows
    nlohmann::json tuning;                           // search log when tuning ran

    // Applies the plan to `table`, keeps the selected columns and predicts.
    std::vector<double> predict(const pipeline::FeatureTable& table) const;

    nlohmann::json to_json() const;
    static FittedModel from_json(const nlohmann::json& j);
};

/// Fits preprocessing on `train` only, selects features, optionally tunes (Nested) and
/// fits the estimator. Sub-steps draw their seeds from derive_seed(seed, {step}).
/// Selection k is clamped to the number of surviving columns.
FittedModel fit_model(const pipeline::FeatureTable& train, const ModelSpec& spec,
                      std::span<const double> weights, std::uint64_t seed, int workers = 0);

}  // namespace bikevol::learners
