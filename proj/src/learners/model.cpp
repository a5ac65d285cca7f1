#include "bikevol/learners/model.hpp"

#include <algorithm>

#include "bikevol/core/errors.hpp"
#include "bikevol/core/rng.hpp"
#include "bikevol/learners/config.hpp"

namespace bikevol::learners {

using nlohmann::json;

std::string_view to_string(TuningMode mode) {
    switch (mode) {
        case TuningMode::None: return "none";
        case TuningMode::Nested: return "nested";
        case TuningMode::Outside: return "outside";
    }
    return "unknown";
}

TuningMode parse_tuning_mode(std::string_view text) {
    for (auto m : {TuningMode::None, TuningMode::Nested, TuningMode::Outside}) {
        if (to_string(m) == text) return m;
    }
    throw ConfigError("unknown tuning mode '" + std::string(text) + "'");
}

ModelSpec ModelSpec::defaults_for(EstimatorKind kind) {
    const auto& cfg = learner_config();
    const auto& fs = cfg.at("feature_selection");
    ModelSpec s;
    s.kind = kind;
    s.selection = default_selection_method(kind);
    s.selection_k = fs.at("k").get<size_t>();
    s.sequential_evaluator = parse_estimator_kind(fs.at("sequential_evaluator").get<std::string>());
    s.selection_folds = fs.at("cv_folds").get<size_t>();
    s.tuning = TuningMode::Nested;
    s.tuning_iter = cfg.at("tuning").at("n_iter").get<size_t>();
    s.tuning_folds = cfg.at("tuning").at("cv_folds").get<size_t>();
    return s;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown option '" + key + "' in " + where);
    }
}

size_t get_count(const json& j, const char* key, size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw ConfigError(std::string(key) + " must be a positive integer");
    }
    return v.get<size_t>();
}

}  // namespace

ModelSpec ModelSpec::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("model spec must be an object");
    reject_unknown(j, {"kind", "hyperparameters", "selection", "tuning", "preprocess"}, "model");
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("model.kind is required");
    ModelSpec s = defaults_for(parse_estimator_kind(j.at("kind").get<std::string>()));
    if (j.contains("hyperparameters")) s.hyperparameters = j.at("hyperparameters");
    if (j.contains("selection")) {
        const auto& fs = j.at("selection");
        if (!fs.is_object()) throw ConfigError("model.selection must be an object");
        reject_unknown(fs, {"method", "k", "evaluator", "cv_folds"}, "model.selection");
        if (fs.contains("method")) s.selection = parse_selection_method(fs.at("method").get<std::string>());
        s.selection_k = get_count(fs, "k", s.selection_k);
        if (fs.contains("evaluator")) s.sequential_evaluator = parse_estimator_kind(fs.at("evaluator").get<std::string>());
        s.selection_folds = get_count(fs, "cv_folds", s.selection_folds);
    }
    if (j.contains("tuning")) {
        const auto& t = j.at("tuning");
        if (!t.is_object()) throw ConfigError("model.tuning must be an object");
        reject_unknown(t, {"mode", "n_iter", "cv_folds", "search_space"}, "model.tuning");
        if (t.contains("mode")) s.tuning = parse_tuning_mode(t.at("mode").get<std::string>());
        s.tuning_iter = get_count(t, "n_iter", s.tuning_iter);
        s.tuning_folds = get_count(t, "cv_folds", s.tuning_folds);
        if (t.contains("search_space")) s.search_space = t.at("search_space");
    }
    if (j.contains("preprocess")) {
        if (!j.at("preprocess").is_boolean()) throw ConfigError("model.preprocess must be true or false");
        s.preprocess = j.at("preprocess").get<bool>();
    }
    s.validate();
    return s;
}

json ModelSpec::to_json() const {
    json tuning_json = {{"mode", std::string(learners::to_string(tuning))},
                        {"n_iter", tuning_iter},
                        {"cv_folds", tuning_folds}};
    if (!search_space.is_null()) tuning_json["search_space"] = search_space;
    return {{"kind", std::string(learners::to_string(kind))},
            {"hyperparameters", hyperparameters},
            {"selection",
             {{"method", std::string(learners::to_string(selection))},
              {"k", selection_k},
              {"evaluator", std::string(learners::to_string(sequential_evaluator))},
              {"cv_folds", selection_folds}}},
            {"tuning", tuning_json},
            {"preprocess", preprocess}};
}

void ModelSpec::validate() const {
    make_estimator(kind, hyperparameters);  // throws on bad hyperparameters
    if (selection_k < 1) throw ConfigError("selection k must be >= 1");
    if (selection_folds < 2 || tuning_folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (tuning != TuningMode::None) validate_search_space(search_space.is_null() ? default_search_space(kind) : search_space);
}

std::vector<double> FittedModel::predict(const pipeline::FeatureTable& table) const {
    if (!estimator) throw PreconditionError("model has no fitted estimator");
    const auto prepared = preprocessed ? pipeline::apply_preprocess(plan, table) : table.select_columns(plan.kept_columns);
    const auto selected_table = prepared.select_columns(selected);
    if (!preprocessed && selected_table.missing_cells() > 0) {
        throw ComputeError("missing cells in a table given to a model fitted without preprocessing");
    }
    return estimator->predict(view_of(selected_table));
}

json FittedModel::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"preprocessed", preprocessed},
            {"plan", plan.to_json()},
            {"selected", selected},
            {"estimator", estimator->to_json()},
            {"tuning", tuning}};
}

FittedModel FittedModel::from_json(const json& j) {
    FittedModel m;
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion) throw DataError("unsupported model format_version");
        m.preprocessed = j.at("preprocessed").get<bool>();
        m.plan = pipeline::PreprocessPlan::from_json(j.at("plan"));
        m.selected = j.at("selected").get<std::vector<std::string>>();
        m.estimator = load_estimator(j.at("estimator"));
        if (j.contains("tuning")) m.tuning = j.at("tuning");
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
    if (m.estimator->n_features() != m.selected.size()) throw DataError("model feature count mismatch");
    return m;
}

FittedModel fit_model(const pipeline::FeatureTable& train, const ModelSpec& spec, std::span<const double> weights,
                      std::uint64_t seed, int workers) {
    if (train.rows() == 0) throw ComputeError("empty training set");
    FittedModel m;
    pipeline::FeatureTable prepared;
    if (spec.preprocess) {
        m.plan = pipeline::fit_preprocess(train);
        m.fit_log = m.plan.drops;
        prepared = pipeline::apply_preprocess(m.plan, train, &m.fit_log);
    } else {
        if (train.missing_cells() > 0) throw PreconditionError("training table has missing cells");
        m.preprocessed = false;
        m.plan.kept_columns = train.column_names();
        prepared = train;
    }
    const DataView full = view_of(prepared);
    const std::span<const double> y = prepared.target;

    std::vector<size_t> chosen;
    if (spec.selection != SelectionMethod::None && full.cols() > 0) {
        SelectionOptions o;
        o.method = spec.selection;
        o.k = std::min(spec.selection_k, full.cols());
        o.seed = derive_seed(seed, {1});
        o.sequential_evaluator = spec.sequential_evaluator;
        o.cv_folds = spec.selection_folds;
        chosen = select_features(full, y, weights, prepared.station_ids, o);
    } else {
        for (size_t c = 0; c < full.cols(); ++c) chosen.push_back(c);
    }
    DataView x;
    x.rows = full.rows;
    for (size_t c : chosen) {
        x.columns.push_back(full.columns[c]);
        m.selected.push_back(prepared.columns[c].name);
    }

    json hyper = spec.hyperparameters.is_null() ? json::object() : spec.hyperparameters;
    const json space = spec.search_space.is_null() ? default_search_space(spec.kind) : spec.search_space;
    if (spec.tuning == TuningMode::Nested && !space.empty()) {
        const auto result = random_search(spec.kind, space, spec.tuning_iter, x, y, weights, prepared.station_ids,
                                          spec.tuning_folds, derive_seed(seed, {2}), workers);
        for (const auto& [key, value] : result.best.items()) hyper[key] = value;
        m.tuning = result.to_json();
    }
    m.estimator = make_estimator(spec.kind, hyper);
    m.estimator->fit(x, y, weights, derive_seed(seed, {3}));
    return m;
}

}  // namespace bikevol::learners
