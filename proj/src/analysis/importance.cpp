#include "bikevol/analysis/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bikevol/core/csv.hpp"
#include "bikevol/core/errors.hpp"
#include "bikevol/core/parallel.hpp"
#include "bikevol/core/rng.hpp"
#include "bikevol/eval/evaluate.hpp"

namespace bikevol::analysis {

using nlohmann::json;
using pipeline::FeatureGroup;
using pipeline::FeatureTable;

namespace {

struct UnitResult {
    double baseline = 0.0;
    std::vector<double> gains;  // per requested group
    std::vector<size_t> used;
};

std::vector<double> predict_floored(const learners::Estimator& est, const learners::DataView& x) {
    auto p = est.predict(x);
    for (double& v : p) v = std::max(v, 0.0);
    return p;
}

}  // namespace

GroupImportance grouped_permutation_importance(const FeatureTable& table, const learners::ModelSpec& spec,
                                               const GpiOptions& options) {
    if (options.n_permutations < 1) throw ConfigError("importance needs at least one permutation");
    if (options.repeats < 1) throw ConfigError("importance needs at least one CV repeat");
    if (table.missing_cells() > 0) throw PreconditionError("importance expects a preprocessed table (no missing cells)");

    std::vector<FeatureGroup> groups = options.groups;
    if (groups.empty()) {
        const auto present = table.groups();
        groups.assign(present.begin(), present.end());
    }
    for (auto g : groups) {
        if (table.columns_in_group(g).empty()) {
            throw PreconditionError("feature group '" + std::string(pipeline::to_string(g)) + "' has no columns");
        }
    }

    std::vector<std::vector<std::vector<size_t>>> splits;
    for (size_t rep = 0; rep < options.repeats; ++rep) {
        splits.push_back(eval::stratified_group_kfold(table, options.k, derive_seed(options.seed, {rep})));
    }
    const size_t n_units = options.repeats * options.k;
    std::vector<UnitResult> units(n_units);

    parallel_for(n_units, options.workers, [&](size_t u) {
        const size_t rep = u / options.k, fold = u % options.k;
        const auto& test_rows = splits[rep][fold];
        std::vector<char> in_test(table.rows(), 0);
        for (size_t r : test_rows) in_test[r] = 1;
        std::vector<size_t> train_rows;
        for (size_t r = 0; r < table.rows(); ++r) {
            if (!in_test[r]) train_rows.push_back(r);
        }
        const auto model = learners::fit_model(table.select_rows(train_rows), spec, {},
                                               derive_seed(options.seed, {rep, fold, 1}), options.workers);
        const auto test = table.select_rows(test_rows);
        const auto prepared = (model.preprocessed ? pipeline::apply_preprocess(model.plan, test)
                                                  : test.select_columns(model.plan.kept_columns))
                                  .select_columns(model.selected);
        const auto x = learners::view_of(prepared);
        auto& out = units[u];
        out.baseline = eval::score(options.metric, prepared.target, predict_floored(*model.estimator, x));

        for (size_t gi = 0; gi < groups.size(); ++gi) {
            const auto cols = prepared.columns_in_group(groups[gi]);
            out.used.push_back(cols.size());
            if (cols.empty()) {
                out.gains.push_back(0.0);
                continue;
            }
            std::vector<std::vector<double>> permuted(cols.size(), std::vector<double>(x.rows));
            auto xp = x;
            for (size_t c = 0; c < cols.size(); ++c) xp.columns[cols[c]] = permuted[c];
            std::vector<size_t> order(x.rows);
            double total = 0.0;
            for (size_t p = 0; p < options.n_permutations; ++p) {
                std::iota(order.begin(), order.end(), size_t{0});
                Rng rng(derive_seed(options.seed, {rep, fold, static_cast<std::uint64_t>(groups[gi]), p, 2}));
                rng.shuffle(std::span<size_t>(order));
                for (size_t c = 0; c < cols.size(); ++c) {
                    const auto& src = x.columns[cols[c]];
                    for (size_t i = 0; i < x.rows; ++i) permuted[c][i] = src[order[i]];
                }
                total += eval::score(options.metric, prepared.target, predict_floored(*model.estimator, xp));
            }
            out.gains.push_back(total / static_cast<double>(options.n_permutations) - out.baseline);
        }
    });

    GroupImportance gi;
    gi.model = std::string(learners::to_string(spec.kind));
    gi.metric = options.metric;
    gi.n_folds = n_units;
    gi.n_permutations = options.n_permutations;
    for (const auto& u : units) gi.baseline_error += u.baseline;
    gi.baseline_error /= static_cast<double>(n_units);
    for (size_t g = 0; g < groups.size(); ++g) {
        GroupScore s;
        s.group = groups[g];
        s.n_columns = table.columns_in_group(groups[g]).size();
        for (const auto& u : units) {
            s.fold_gains.push_back(u.gains[g]);
            s.n_used_columns = std::max(s.n_used_columns, u.used[g]);
        }
        const double n = static_cast<double>(n_units);
        s.gain = std::accumulate(s.fold_gains.begin(), s.fold_gains.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : s.fold_gains) ss += (v - s.gain) * (v - s.gain);
        s.sd = n_units > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        const double half = 1.96 * s.sd / std::sqrt(n);
        s.ci_low = s.gain - half;
        s.ci_high = s.gain + half;
        gi.groups.push_back(std::move(s));
    }
    return gi;
}

json GroupImportance::to_json() const {
    json gs = json::array();
    for (const auto& g : groups) {
        gs.push_back({{"group", std::string(pipeline::to_string(g.group))},
                      {"n_columns", g.n_columns},
                      {"n_used_columns", g.n_used_columns},
                      {"gain", g.gain},
                      {"sd", g.sd},
                      {"ci_low", g.ci_low},
                      {"ci_high", g.ci_high},
                      {"fold_gains", g.fold_gains}});
    }
    return {{"model", model},
            {"metric", std::string(eval::to_string(metric))},
            {"n_folds", n_folds},
            {"n_permutations", n_permutations},
            {"baseline_error", baseline_error},
            {"groups", gs}};
}

std::string GroupImportance::to_csv() const {
    std::ostringstream out;
    csv::write_row(out, {"group", "n_columns", "gain", "ci_low", "ci_high"});
    for (const auto& g : groups) {
        csv::write_row(out, {std::string(pipeline::to_string(g.group)), std::to_string(g.n_columns),
                             csv::format_number(g.gain), csv::format_number(g.ci_low), csv::format_number(g.ci_high)});
    }
    return out.str();
}

}  // namespace bikevol::analysis
