#include "bikevol/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "bikevol/core/errors.hpp"
#include "bikevol/core/rng.hpp"

#ifndef BIKEVOL_ENGINE_VERSION
#define BIKEVOL_ENGINE_VERSION "0.0.0"
#endif

namespace bikevol::cli {

using nlohmann::json;

std::string engine_version() { return BIKEVOL_ENGINE_VERSION; }

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown option '" + key + "' in " + where);
    }
}

template <typename T>
void read_number(const json& j, const char* key, T& field, const std::string& where) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
            throw ConfigError(where + "." + key + " must be a non-negative integer");
        }
    } else {
        if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    }
    field = v.get<T>();
}

std::string read_string(const json& j, const char* key, const std::string& where, std::string fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
    return j.at(key).get<std::string>();
}

ingest::SynthConfig synth_from_json(const json& j) {
    ingest::SynthConfig s;
    const std::string w = "synth";
    reject_unknown(j, {"n_long", "n_short", "n_days", "extent_km", "short_term_days", "paired_locations", "n_bikes",
                       "trips_per_bike_day", "n_motor_detectors", "noise_sd", "station_effect_sd",
                       "missing_hour_rate"},
                   w);
    read_number(j, "n_long", s.n_long, w);
    read_number(j, "n_short", s.n_short, w);
    read_number(j, "n_days", s.n_days, w);
    read_number(j, "extent_km", s.extent_km, w);
    read_number(j, "short_term_days", s.short_term_days, w);
    read_number(j, "paired_locations", s.paired_locations, w);
    read_number(j, "n_bikes", s.n_bikes, w);
    read_number(j, "trips_per_bike_day", s.trips_per_bike_day, w);
    read_number(j, "n_motor_detectors", s.n_motor_detectors, w);
    read_number(j, "noise_sd", s.noise_sd, w);
    read_number(j, "station_effect_sd", s.station_effect_sd, w);
    read_number(j, "missing_hour_rate", s.missing_hour_rate, w);
    return s;
}

json synth_to_json(const ingest::SynthConfig& s) {
    return {{"n_long", s.n_long},
            {"n_short", s.n_short},
            {"n_days", s.n_days},
            {"extent_km", s.extent_km},
            {"short_term_days", s.short_term_days},
            {"paired_locations", s.paired_locations},
            {"n_bikes", s.n_bikes},
            {"trips_per_bike_day", s.trips_per_bike_day},
            {"n_motor_detectors", s.n_motor_detectors},
            {"noise_sd", s.noise_sd},
            {"station_effect_sd", s.station_effect_sd},
            {"missing_hour_rate", s.missing_hour_rate}};
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    if (j.is_null()) return c;
    reject_unknown(j, {"seed", "synth", "cleaning", "features", "window", "model", "evaluation", "importance",
                       "simulation"},
                   "config");
    read_number(j, "seed", c.seed, "config");
    if (j.contains("synth")) c.synth = synth_from_json(j.at("synth"));
    if (j.contains("cleaning")) c.cleaning = pipeline::cleaning_rules_from_json(j.at("cleaning"));
    if (j.contains("features")) c.features = pipeline::feature_config_from_json(j.at("features"));
    if (j.contains("window")) c.window = parse_count_window(read_string(j, "window", "config", ""));
    if (j.contains("model")) c.model = learners::ModelSpec::from_json(j.at("model"));
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        reject_unknown(e, {"aadb_min_rows"}, "evaluation");
        read_number(e, "aadb_min_rows", c.aadb_min_rows, "evaluation");
    }
    if (j.contains("importance")) {
        const auto& g = j.at("importance");
        const std::string w = "importance";
        reject_unknown(g, {"metric", "n_permutations", "folds", "repeats", "groups"}, w);
        c.importance.metric = eval::parse_metric(read_string(g, "metric", w, "mae"));
        read_number(g, "n_permutations", c.importance.n_permutations, w);
        read_number(g, "folds", c.importance.k, w);
        read_number(g, "repeats", c.importance.repeats, w);
        if (g.contains("groups")) {
            for (const auto& name : g.at("groups")) {
                c.importance.groups.push_back(pipeline::parse_feature_group(name.get<std::string>()));
            }
        }
    }
    if (j.contains("simulation")) {
        const auto& s = j.at("simulation");
        const std::string w = "simulation";
        reject_unknown(s, {"strategy", "scenario", "max_days", "reps", "weight_share", "metric", "days",
                           "min_test_rows"},
                       w);
        auto& o = c.simulation;
        o.strategy = analysis::parse_strategy(read_string(s, "strategy", w, "one_day"));
        o.scenario = analysis::parse_scenario(read_string(s, "scenario", w, "full_city"));
        read_number(s, "max_days", o.max_days, w);
        read_number(s, "reps", o.reps, w);
        read_number(s, "weight_share", o.weight_share, w);
        o.metric = eval::parse_metric(read_string(s, "metric", w, "smape"));
        if (s.contains("days")) o.days = s.at("days").get<std::vector<size_t>>();
        read_number(s, "min_test_rows", o.min_test_rows, w);
        o.validate();
    }
    if (c.importance.n_permutations < 1 || c.importance.k < 2 || c.importance.repeats < 1) {
        throw ConfigError("importance needs n_permutations >= 1, folds >= 2 and repeats >= 1");
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

json RunConfig::to_json() const {
    json groups = json::array();
    for (auto g : importance.groups) groups.push_back(std::string(pipeline::to_string(g)));
    return {{"seed", seed},
            {"synth", synth_to_json(synth)},
            {"cleaning", pipeline::to_json(cleaning)},
            {"features", pipeline::to_json(features)},
            {"window", std::string(bikevol::to_string(window))},
            {"model", model.to_json()},
            {"evaluation", {{"aadb_min_rows", aadb_min_rows}}},
            {"importance",
             {{"metric", std::string(eval::to_string(importance.metric))},
              {"n_permutations", importance.n_permutations},
              {"folds", importance.k},
              {"repeats", importance.repeats},
              {"groups", groups}}},
            {"simulation",
             {{"strategy", std::string(analysis::to_string(simulation.strategy))},
              {"scenario", std::string(analysis::to_string(simulation.scenario))},
              {"max_days", simulation.max_days},
              {"reps", simulation.reps},
              {"weight_share", simulation.weight_share},
              {"metric", std::string(eval::to_string(simulation.metric))},
              {"days", simulation.days},
              {"min_test_rows", simulation.min_test_rows}}}};
}

std::string RunConfig::hash() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
    return buf;
}

}  // namespace bikevol::cli
