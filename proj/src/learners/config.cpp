#include "bikevol/learners/config.hpp"

#include "bikevol/core/errors.hpp"

namespace bikevol::learners {

extern const char* const kEmbeddedLearnerConfig;

using nlohmann::json;

const json& learner_config() {
    static const json config = json::parse(kEmbeddedLearnerConfig);
    return config;
}

json default_hyperparameters(EstimatorKind kind) {
    return learner_config().at("estimators").at(std::string(to_string(kind))).at("defaults");
}

json default_search_space(EstimatorKind kind) {
    return learner_config().at("estimators").at(std::string(to_string(kind))).at("search_space");
}

std::string learner_config_version() { return learner_config().at("version").get<std::string>(); }

}  // namespace bikevol::learners
