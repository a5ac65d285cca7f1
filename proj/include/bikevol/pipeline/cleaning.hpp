#pragma once

#include <array>
#include <string_view>
#include <utility>
#include <vector>

#include "bikevol/ingest/bundle.hpp"
#include "json.hpp"

namespace bikevol::pipeline {

struct CleaningRules {
    double min_distance = 100.0;     // m
    double max_distance = 45'000.0;  // m
    double min_duration = 120.0;     // s
    double max_duration = 36'000.0;  // s
    double min_speed = 2.0;          // km/h
    double max_speed = 40.0;         // km/h

    // Throws ConfigError unless every bound is positive and each min < max.
    void validate() const;
};

CleaningRules cleaning_rules_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CleaningRules& rules);

// Removal buckets in attribution order. Unroutable trips get their own bucket ahead of the rules.
enum class RemovalBucket {
    Unroutable,
    MinDistance,
    MaxDistance,
    MinDuration,
    MaxDuration,
    MinSpeed,
    MaxSpeed,
};
inline constexpr size_t kRemovalBuckets = 7;
std::string_view to_string(RemovalBucket bucket);

struct RemovalReport {
    size_t input = 0;
    std::array<size_t, kRemovalBuckets> removed{};
    size_t remaining = 0;

    size_t removed_by(RemovalBucket b) const { return removed[static_cast<size_t>(b)]; }
    size_t total_removed() const;
    // Share of the original total, in percent.
    double percent(RemovalBucket b) const;
    nlohmann::json to_json() const;
};

/// Applies the rules in declaration order; each removed trip is charged to the first rule it
/// violates. Throws PreconditionError on a trip that was never routed.
std::pair<std::vector<ingest::Trip>, RemovalReport> clean_trips(const std::vector<ingest::Trip>& trips,
                                                               const CleaningRules& rules);

}  // namespace bikevol::pipeline
