#include "bikevol/pipeline/cleaning.hpp"

#include <algorithm>
#include <numeric>

#include "bikevol/core/errors.hpp"

namespace bikevol::pipeline {

using nlohmann::json;

void CleaningRules::validate() const {
    const std::array<std::pair<double, double>, 3> pairs{
        {{min_distance, max_distance}, {min_duration, max_duration}, {min_speed, max_speed}}};
    for (const auto& [lo, hi] : pairs) {
        if (!(lo > 0.0) || !(hi > 0.0)) throw ConfigError("cleaning bounds must be positive");
        if (!(lo < hi)) throw ConfigError("cleaning bounds need min < max");
    }
}

CleaningRules cleaning_rules_from_json(const json& j) {
    CleaningRules r;
    if (j.is_null()) return r;
    if (!j.is_object()) throw ConfigError("cleaning rules must be an object");
    const auto get = [&](const char* key, double& field) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw ConfigError(std::string("cleaning.") + key + " must be a number");
        field = j[key].get<double>();
    };
    for (const auto& [key, _] : j.items()) {
        static const std::array<std::string_view, 6> known{"min_distance", "max_distance",
                                                           "min_duration", "max_duration",
                                                           "min_speed",    "max_speed"};
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown cleaning rule '" + key + "'");
        }
    }
    get("min_distance", r.min_distance);
    get("max_distance", r.max_distance);
    get("min_duration", r.min_duration);
    get("max_duration", r.max_duration);
    get("min_speed", r.min_speed);
    get("max_speed", r.max_speed);
    r.validate();
    return r;
}

json to_json(const CleaningRules& r) {
    return {{"min_distance", r.min_distance}, {"max_distance", r.max_distance},
            {"min_duration", r.min_duration}, {"max_duration", r.max_duration},
            {"min_speed", r.min_speed},       {"max_speed", r.max_speed}};
}

std::string_view to_string(RemovalBucket bucket) {
    switch (bucket) {
        case RemovalBucket::Unroutable: return "unroutable";
        case RemovalBucket::MinDistance: return "min_distance";
        case RemovalBucket::MaxDistance: return "max_distance";
        case RemovalBucket::MinDuration: return "min_duration";
        case RemovalBucket::MaxDuration: return "max_duration";
        case RemovalBucket::MinSpeed: return "min_speed";
        case RemovalBucket::MaxSpeed: return "max_speed";
    }
    return "unknown";
}

size_t RemovalReport::total_removed() const {
    return std::accumulate(removed.begin(), removed.end(), size_t{0});
}

double RemovalReport::percent(RemovalBucket b) const {
    return input == 0 ? 0.0 : 100.0 * static_cast<double>(removed_by(b)) / static_cast<double>(input);
}

json RemovalReport::to_json() const {
    json rules = json::array();
    for (size_t i = 0; i < kRemovalBuckets; ++i) {
        const auto b = static_cast<RemovalBucket>(i);
        rules.push_back({{"rule", std::string(to_string(b))},
                         {"removed", removed[i]},
                         {"percent", percent(b)}});
    }
    return {{"input", input}, {"removed", rules}, {"remaining", remaining}};
}

namespace {

std::optional<RemovalBucket> first_violation(const ingest::Trip& t, const CleaningRules& r) {
    const double dist = *t.routed_distance;
    const double dur = t.duration_s();
    const double speed = *t.mean_speed;
    if (dist < r.min_distance) return RemovalBucket::MinDistance;
    if (dist > r.max_distance) return RemovalBucket::MaxDistance;
    if (dur < r.min_duration) return RemovalBucket::MinDuration;
    if (dur > r.max_duration) return RemovalBucket::MaxDuration;
    if (speed < r.min_speed) return RemovalBucket::MinSpeed;
    if (speed > r.max_speed) return RemovalBucket::MaxSpeed;
    return std::nullopt;
}

}  // namespace

std::pair<std::vector<ingest::Trip>, RemovalReport> clean_trips(const std::vector<ingest::Trip>& trips,
                                                               const CleaningRules& rules) {
    rules.validate();
    RemovalReport report;
    report.input = trips.size();
    std::vector<ingest::Trip> kept;
    kept.reserve(trips.size());
    for (size_t i = 0; i < trips.size(); ++i) {
        const auto& t = trips[i];
        if (t.unroutable) {
            ++report.removed[static_cast<size_t>(RemovalBucket::Unroutable)];
            continue;
        }
        if (!t.routed()) {
            throw PreconditionError("trip " + std::to_string(i) + " of bike '" + t.bike_id +
                                    "' has not been routed");
        }
        if (const auto v = first_violation(t, rules)) {
            ++report.removed[static_cast<size_t>(*v)];
        } else {
            kept.push_back(t);
        }
    }
    report.remaining = kept.size();
    return {std::move(kept), report};
}

}  // namespace bikevol::pipeline
