#pragma once

#include <string>

#include "bikevol/learners/estimator.hpp"
#include "json.hpp"

namespace bikevol::learners {

/// The learner configuration shipped with the engine (config/learners.json, embedded at
/// build time): per-kind hyperparameter defaults and search spaces, and feature-selection
/// defaults.
const nlohmann::json& learner_config();

nlohmann::json default_hyperparameters(EstimatorKind kind);
nlohmann::json default_search_space(EstimatorKind kind);

// Version string of the embedded config, folded into config hashes.
std::string learner_config_version();

}  // namespace bikevol::learners
