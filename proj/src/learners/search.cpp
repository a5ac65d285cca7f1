#include "bikevol/learners/search.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bikevol/core/errors.hpp"
#include "bikevol/core/parallel.hpp"

namespace bikevol::learners {

using nlohmann::json;

std::vector<std::vector<size_t>> group_kfold(std::span<const std::string> groups, size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("group k-fold needs k >= 2");
    std::map<std::string, std::vector<size_t>> rows_of;
    for (size_t i = 0; i < groups.size(); ++i) rows_of[groups[i]].push_back(i);
    if (rows_of.size() < 2) throw ComputeError("group k-fold needs at least two groups");
    std::vector<std::string> names;
    for (const auto& [name, _] : rows_of) names.push_back(name);
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(names));
    k = std::min(k, names.size());
    std::vector<std::vector<size_t>> folds(k);
    for (size_t i = 0; i < names.size(); ++i) {
        auto& f = folds[i % k];
        const auto& r = rows_of[names[i]];
        f.insert(f.end(), r.begin(), r.end());
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

double mean_absolute_error(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.empty()) throw ComputeError("mae: length mismatch or empty input");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

double grouped_cv_mae(EstimatorKind kind, const json& hyperparameters, const DataView& x, std::span<const double> y,
                      std::span<const double> weights, std::span<const std::string> groups, size_t k,
                      std::uint64_t seed) {
    const auto folds = group_kfold(groups, k, seed);
    double total = 0.0;
    for (size_t f = 0; f < folds.size(); ++f) {
        std::vector<char> in_val(x.rows, 0);
        for (size_t r : folds[f]) in_val[r] = 1;
        std::vector<size_t> train;
        for (size_t r = 0; r < x.rows; ++r) {
            if (!in_val[r]) train.push_back(r);
        }
        const auto xt = take_rows(x, train);
        const auto xv = take_rows(x, folds[f]);
        const auto yt = take(y, train);
        const auto wt = weights.empty() ? std::vector<double>{} : take(weights, train);
        auto est = make_estimator(kind, hyperparameters);
        est->fit(xt.view(), yt, wt, derive_seed(seed, {f}));
        total += mean_absolute_error(take(y, folds[f]), est->predict(xv.view()));
    }
    return total / static_cast<double>(folds.size());
}

void validate_search_space(const json& space) {
    if (!space.is_object()) throw ConfigError("search space must be an object");
    for (const auto& [name, d] : space.items()) {
        if (!d.is_object() || !d.contains("type")) throw ConfigError("search space '" + name + "' needs a type");
        const auto type = d.at("type").get<std::string>();
        if (type == "categorical") {
            if (!d.contains("values") || !d["values"].is_array() || d["values"].empty()) {
                throw ConfigError("search space '" + name + "' needs a non-empty value list");
            }
        } else if (type == "uniform" || type == "log_uniform" || type == "int_uniform") {
            if (!d.contains("low") || !d.contains("high") || !d["low"].is_number() || !d["high"].is_number()) {
                throw ConfigError("search space '" + name + "' needs numeric low/high");
            }
            const double lo = d["low"].get<double>(), hi = d["high"].get<double>();
            if (!(lo <= hi)) throw ConfigError("search space '" + name + "' has low > high");
            if (type == "log_uniform" && !(lo > 0)) throw ConfigError("search space '" + name + "' needs low > 0");
        } else {
            throw ConfigError("search space '" + name + "' has unknown type '" + type + "'");
        }
    }
}

json sample_parameters(const json& space, Rng& rng) {
    json out = json::object();
    for (const auto& [name, d] : space.items()) {
        const auto type = d.at("type").get<std::string>();
        if (type == "categorical") {
            const auto& values = d.at("values");
            out[name] = values[static_cast<size_t>(rng.below(values.size()))];
        } else {
            const double lo = d.at("low").get<double>(), hi = d.at("high").get<double>();
            if (type == "uniform") {
                out[name] = rng.uniform(lo, hi);
            } else if (type == "log_uniform") {
                out[name] = std::exp(rng.uniform(std::log(lo), std::log(hi)));
            } else {
                const auto a = static_cast<long long>(std::ceil(lo)), b = static_cast<long long>(std::floor(hi));
                out[name] = a + static_cast<long long>(rng.below(static_cast<std::uint64_t>(b - a + 1)));
            }
        }
    }
    return out;
}

json SearchResult::to_json() const {
    json trials_json = json::array();
    for (const auto& t : trials) {
        json j = {{"trial", t.index}, {"parameters", t.parameters}, {"ok", t.ok}};
        if (t.ok) {
            j["cv_mae"] = t.cv_mae;
        } else {
            j["error"] = t.error;
        }
        trials_json.push_back(std::move(j));
    }
    return {{"best", best}, {"best_cv_mae", best_cv_mae}, {"trials", trials_json}};
}

SearchResult random_search(EstimatorKind kind, const json& space, size_t n_iter, const DataView& x,
                           std::span<const double> y, std::span<const double> weights,
                           std::span<const std::string> groups, size_t k_folds, std::uint64_t seed, int workers) {
    if (n_iter < 1) throw ConfigError("random search needs n_iter >= 1");
    validate_search_space(space);
    SearchResult result;
    result.trials.resize(n_iter);
    for (size_t t = 0; t < n_iter; ++t) {
        Rng rng(derive_seed(seed, {t}));
        result.trials[t].index = t;
        result.trials[t].parameters = sample_parameters(space, rng);
    }
    parallel_for(n_iter, workers, [&](size_t t) {
        auto& trial = result.trials[t];
        try {
            trial.cv_mae = grouped_cv_mae(kind, trial.parameters, x, y, weights, groups, k_folds,
                                          derive_seed(seed, {t, 1}));
            trial.ok = std::isfinite(trial.cv_mae);
            if (!trial.ok) trial.error = "non-finite CV error";
        } catch (const Error& e) {
            trial.ok = false;
            trial.error = e.what();
        }
    });
    bool found = false;
    for (const auto& t : result.trials) {
        if (t.ok && (!found || t.cv_mae < result.best_cv_mae)) {
            result.best = t.parameters;
            result.best_cv_mae = t.cv_mae;
            found = true;
        }
    }
    if (!found) throw ComputeError("random search: every trial failed");
    return result;
}

}  // namespace bikevol::learners
