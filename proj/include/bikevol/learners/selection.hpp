#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bikevol/learners/estimator.hpp"

namespace bikevol::learners {

enum class SelectionMethod {
    None,
    UnivariateKBest,
    RFELinear,
    FromModelBoosting,
    SequentialForward,
};

std::string_view to_string(SelectionMethod method);
SelectionMethod parse_selection_method(std::string_view text);

// Default method for a model kind, from the shipped configuration.
SelectionMethod default_selection_method(EstimatorKind kind);

struct SelectionOptions {
    SelectionMethod method = SelectionMethod::None;
    size_t k = 0;  // target column count (ignored by FromModelBoosting and None)
    std::uint64_t seed = 0;
    EstimatorKind sequential_evaluator = EstimatorKind::Linear;
    size_t cv_folds = 5;
};

/// Returns the kept column indices in ascending order.
///   UnivariateKBest:   the k columns with the largest |Pearson r| with y (ties: lower index).
///   RFELinear:         drops the smallest |standardized coefficient| of a weighted linear refit
///                      until k remain (ties: the later column goes).
///   FromModelBoosting: columns whose total RegularizedBoosting split gain >= the median gain.
///   SequentialForward: greedily adds the column that most lowers grouped-CV MAE, until k or
///                      no improvement.
/// Throws PreconditionError when k is 0 or exceeds the column count, ComputeError on a
/// constant target.
std::vector<size_t> select_features(const DataView& x, std::span<const double> y, std::span<const double> weights,
                                    std::span<const std::string> groups, const SelectionOptions& options);

}  // namespace bikevol::learners
