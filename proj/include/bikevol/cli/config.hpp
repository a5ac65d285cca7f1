#pragma once

#include <cstdint>
#include <string>

#include "bikevol/analysis/importance.hpp"
#include "bikevol/analysis/sampling.hpp"
#include "bikevol/core/counts.hpp"
#include "bikevol/ingest/synthetic.hpp"
#include "bikevol/learners/model.hpp"
#include "bikevol/pipeline/cleaning.hpp"
#include "bikevol/pipeline/features.hpp"
#include "json.hpp"

namespace bikevol::cli {

/// Every tunable of a run. Defaults follow the published study setup.
struct RunConfig {
    std::uint64_t seed = 7;
    ingest::SynthConfig synth;
    pipeline::CleaningRules cleaning;
    pipeline::FeatureConfig features;
    CountWindow window = CountWindow::FullDay;
    learners::ModelSpec model = learners::ModelSpec::defaults_for(learners::EstimatorKind::RegularizedBoosting);
    size_t aadb_min_rows = 30;
    analysis::GpiOptions importance;
    analysis::SamplingOptions simulation;

    // Unknown keys anywhere are ConfigErrors; absent keys keep their defaults.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    // Fully resolved configuration, defaults included.
    nlohmann::json to_json() const;
    // 16 hex digits of FNV-1a over the canonical resolved JSON.
    std::string hash() const;
};

std::string engine_version();

}  // namespace bikevol::cli
