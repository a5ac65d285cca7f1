#include "bikevol/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "bikevol/core/csv.hpp"
#include "bikevol/core/errors.hpp"
#include "bikevol/core/parallel.hpp"
#include "bikevol/core/rng.hpp"
#include "bikevol/eval/metrics.hpp"

namespace bikevol::eval {

using nlohmann::json;
using pipeline::FeatureTable;

std::string_view to_string(Scale scale) { return scale == Scale::Daily ? "daily" : "aadb"; }

Scale parse_scale(std::string_view text) {
    if (text == "daily") return Scale::Daily;
    if (text == "aadb") return Scale::AADB;
    throw ConfigError("unknown scale '" + std::string(text) + "' (daily, aadb)");
}

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::string> flags(const std::vector<double>& v) {
    const double m = mean_of(v), sd = sample_sd(v);
    std::vector<std::string> out;
    for (double x : v) {
        if (x - m > sd && sd > 0.0) {
            out.emplace_back("above");
        } else if (m - x > sd && sd > 0.0) {
            out.emplace_back("below");
        } else {
            out.emplace_back("");
        }
    }
    return out;
}

std::vector<size_t> scorable_rows(const FeatureTable& t, std::string_view station) {
    std::vector<size_t> out;
    for (size_t r : t.rows_of_station(station)) {
        if (std::isfinite(t.target[r])) out.push_back(r);
    }
    return out;
}

std::vector<std::string> long_term_stations(const FeatureTable& t) {
    std::set<std::string> long_term;
    for (size_t r = 0; r < t.rows(); ++r) {
        if (t.station_kinds[r] == StationKind::LongTerm) long_term.insert(t.station_ids[r]);
    }
    std::vector<std::string> out;
    for (const auto& s : t.stations()) {
        if (long_term.count(s)) out.push_back(s);
    }
    return out;
}

std::vector<size_t> rows_of(const FeatureTable& t, const std::vector<std::string>& stations) {
    const std::set<std::string> wanted(stations.begin(), stations.end());
    std::vector<size_t> out;
    for (size_t r = 0; r < t.rows(); ++r) {
        if (wanted.count(t.station_ids[r]) && std::isfinite(t.target[r])) out.push_back(r);
    }
    return out;
}

HeldOut predict_held_out(const FeatureTable& table, std::vector<size_t> train_rows, std::vector<size_t> test_rows,
                         const std::string& station, const learners::ModelSpec& spec, std::uint64_t seed,
                         int workers) {
    const auto train = table.select_rows(train_rows);
    const auto test = table.select_rows(test_rows);
    auto model = learners::fit_model(train, spec, {}, seed, workers);
    HeldOut h;
    h.station_id = station;
    h.yhat = model.predict(test);
    for (double& v : h.yhat) v = std::max(v, 0.0);
    h.y = test.target;
    h.dates = test.dates;
    h.rows = std::move(test_rows);
    h.train_rows = std::move(train_rows);
    h.fit_log = std::move(model.fit_log);
    return h;
}

}  // namespace

json EvaluationReport::to_json() const {
    json st = json::array();
    for (const auto& s : stations) {
        st.push_back({{"station_id", s.station_id}, {"n_test_rows", s.n_test_rows}, {"mae", s.mae}, {"smape", s.smape}});
    }
    return {{"protocol", protocol},
            {"model", model},
            {"window", std::string(bikevol::to_string(window))},
            {"scale", std::string(eval::to_string(scale))},
            {"aggregate", {{"mae", mae}, {"smape", smape}}},
            {"stations", st},
            {"excluded", excluded}};
}

std::string EvaluationReport::to_csv() const {
    std::vector<double> maes, smapes;
    for (const auto& s : stations) {
        maes.push_back(s.mae);
        smapes.push_back(s.smape);
    }
    const auto mae_flags = flags(maes), smape_flags = flags(smapes);
    std::ostringstream out;
    csv::write_row(out, {"station_id", "n_test_rows", "mae", "smape", "mae_flag", "smape_flag"});
    for (size_t i = 0; i < stations.size(); ++i) {
        const auto& s = stations[i];
        csv::write_row(out, {s.station_id, std::to_string(s.n_test_rows), csv::format_number(s.mae),
                             csv::format_number(s.smape), mae_flags[i], smape_flags[i]});
    }
    return out.str();
}

void aggregate(EvaluationReport& r) {
    if (r.stations.empty()) throw ComputeError(r.protocol + ": no station could be scored");
    double m = 0.0, s = 0.0;
    for (const auto& st : r.stations) {
        m += st.mae;
        s += st.smape;
    }
    r.mae = m / static_cast<double>(r.stations.size());
    r.smape = s / static_cast<double>(r.stations.size());
}

FoldPlan logo_plan(const FeatureTable& table) {
    const auto stations = long_term_stations(table);
    if (stations.size() < 2) throw PreconditionError("LOGO needs at least two long-term stations");
    FoldPlan plan;
    for (const auto& test : stations) {
        Fold f;
        f.test_stations = {test};
        for (const auto& s : stations) {
            if (s != test) f.train_stations.push_back(s);
        }
        plan.push_back(std::move(f));
    }
    return plan;
}

std::pair<learners::ModelSpec, json> resolve_outside_tuning(const FeatureTable& train, const learners::ModelSpec& spec,
                                                            std::uint64_t seed, int workers) {
    if (spec.tuning != learners::TuningMode::Outside) return {spec, json()};
    auto search_spec = spec;
    search_spec.tuning = learners::TuningMode::Nested;
    const auto model = learners::fit_model(train, search_spec, {}, seed, workers);
    auto inner = spec;
    inner.tuning = learners::TuningMode::None;
    if (!model.tuning.is_null()) {
        for (const auto& [key, value] : model.tuning.at("best").items()) inner.hyperparameters[key] = value;
    }
    return {inner, model.tuning};
}

LogoRun logo_predict(const FeatureTable& table, const learners::ModelSpec& spec, const EvalOptions& options) {
    LogoRun run;
    run.plan = logo_plan(table);
    auto inner = spec;
    if (spec.tuning == learners::TuningMode::Outside) {
        const auto all = rows_of(table, long_term_stations(table));
        std::tie(inner, run.tuning) =
            resolve_outside_tuning(table.select_rows(all), spec, derive_seed(options.seed, {0}), options.workers);
    }

    std::vector<std::optional<HeldOut>> slots(run.plan.size());
    std::vector<std::string> reasons(run.plan.size());
    parallel_for(run.plan.size(), options.workers, [&](size_t f) {
        const auto& fold = run.plan[f];
        const auto& station = fold.test_stations.front();
        auto test_rows = scorable_rows(table, station);
        if (test_rows.empty()) {
            reasons[f] = station + ": no valid rows";
            return;
        }
        slots[f] = predict_held_out(table, rows_of(table, fold.train_stations), std::move(test_rows), station, inner,
                                    derive_seed(options.seed, {fnv1a(station)}), options.workers);
    });
    for (size_t f = 0; f < slots.size(); ++f) {
        if (slots[f]) {
            run.folds.push_back(std::move(*slots[f]));
        } else {
            run.excluded.push_back(reasons[f]);
        }
    }
    return run;
}

EvaluationReport score_held_out(const std::vector<HeldOut>& folds, Scale scale, const EvalOptions& options) {
    EvaluationReport r;
    r.scale = scale;
    for (const auto& h : folds) {
        if (h.y.empty()) {
            r.excluded.push_back(h.station_id + ": no valid rows");
            continue;
        }
        if (scale == Scale::Daily) {
            r.stations.push_back({h.station_id, h.y.size(), mae(h.y, h.yhat), smape(h.y, h.yhat)});
            continue;
        }
        std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_year;
        for (size_t i = 0; i < h.y.size(); ++i) {
            auto& [ys, ps] = by_year[year_of(h.dates[i])];
            ys.push_back(h.y[i]);
            ps.push_back(h.yhat[i]);
        }
        std::vector<double> truth, pred;
        for (const auto& [year, yp] : by_year) {
            if (yp.first.size() < options.aadb_min_rows) continue;
            truth.push_back(mean_of(yp.first));
            pred.push_back(mean_of(yp.second));
        }
        if (truth.empty()) {
            r.excluded.push_back(h.station_id + ": no station-year with at least " +
                                 std::to_string(options.aadb_min_rows) + " daily rows");
            continue;
        }
        r.stations.push_back({h.station_id, truth.size(), mae(truth, pred), smape(truth, pred)});
    }
    return r;
}

EvaluationReport logo_evaluate(const FeatureTable& table, const learners::ModelSpec& spec, Scale scale,
                               const EvalOptions& options) {
    const auto run = logo_predict(table, spec, options);
    auto r = score_held_out(run.folds, scale, options);
    r.protocol = "logo";
    r.model = std::string(learners::to_string(spec.kind));
    r.window = table.window;
    r.excluded.insert(r.excluded.begin(), run.excluded.begin(), run.excluded.end());
    aggregate(r);
    return r;
}

EvaluationReport shortterm_evaluate(const FeatureTable& table, const learners::ModelSpec& spec,
                                    const EvalOptions& options) {
    if (table.window != CountWindow::Daytime) {
        throw PreconditionError("short-term evaluation needs a table built with the daytime window");
    }
    std::vector<std::string> short_term;
    {
        std::set<std::string> seen;
        for (size_t r = 0; r < table.rows(); ++r) {
            if (table.station_kinds[r] == StationKind::ShortTerm && seen.insert(table.station_ids[r]).second) {
                short_term.push_back(table.station_ids[r]);
            }
        }
    }
    if (short_term.empty()) throw PreconditionError("table has no short-term stations");
    const auto train_rows = rows_of(table, long_term_stations(table));
    if (train_rows.empty()) throw PreconditionError("table has no long-term rows to train on");

    auto inner = spec;
    json tuning;
    const auto train = table.select_rows(train_rows);
    std::tie(inner, tuning) = resolve_outside_tuning(train, spec, derive_seed(options.seed, {0}), options.workers);
    const auto model = learners::fit_model(train, inner, {}, derive_seed(options.seed, {1}), options.workers);

    std::vector<HeldOut> held;
    for (const auto& station : short_term) {
        HeldOut h;
        h.station_id = station;
        h.rows = scorable_rows(table, station);
        if (!h.rows.empty()) {
            const auto test = table.select_rows(h.rows);
            h.yhat = model.predict(test);
            for (double& v : h.yhat) v = std::max(v, 0.0);
            h.y = test.target;
            h.dates = test.dates;
        }
        held.push_back(std::move(h));
    }
    auto r = score_held_out(held, Scale::Daily, options);
    r.protocol = "short_term";
    r.model = std::string(learners::to_string(spec.kind));
    r.window = table.window;
    aggregate(r);
    return r;
}

std::vector<std::vector<size_t>> stratified_group_kfold(const FeatureTable& table, size_t k, std::uint64_t seed,
                                                        std::vector<std::string>* warnings) {
    if (k < 2) throw ConfigError("stratified k-fold needs k >= 2");
    if (table.rows() < k) throw PreconditionError("stratified k-fold needs at least k rows");
    std::vector<std::vector<size_t>> folds(k);
    // Rotating start fold keeps the global fold sizes balanced as well.
    size_t offset = 0;
    for (const auto& station : table.stations()) {
        auto rows = table.rows_of_station(station);
        if (rows.size() < k && warnings) {
            warnings->push_back(station + ": " + std::to_string(rows.size()) + " rows for " + std::to_string(k) +
                                " folds");
        }
        Rng rng(derive_seed(seed, {fnv1a(station)}));
        rng.shuffle(std::span<size_t>(rows));
        for (size_t i = 0; i < rows.size(); ++i) folds[(offset + i) % k].push_back(rows[i]);
        offset = (offset + rows.size()) % k;
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

}  // namespace bikevol::eval
