#include "bikevol/analysis/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "bikevol/core/csv.hpp"
#include "bikevol/core/errors.hpp"
#include "bikevol/core/parallel.hpp"

namespace bikevol::analysis {

using nlohmann::json;
using pipeline::FeatureTable;

namespace {

constexpr size_t kMaxBlockAttempts = 1000;
constexpr double kZ95 = 1.96;

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::OneDay: return "one_day";
        case Strategy::ThreeDay: return "three_day";
        case Strategy::SevenDay: return "seven_day";
    }
    return "unknown";
}

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::FullCity: return "full_city";
        case Scenario::LocationSpecific: return "location_specific";
        case Scenario::SampleMeanBaseline: return "sample_mean_baseline";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view text) {
    for (auto s : {Strategy::OneDay, Strategy::ThreeDay, Strategy::SevenDay}) {
        if (to_string(s) == text) return s;
    }
    throw ConfigError("unknown sampling strategy '" + std::string(text) + "'");
}

Scenario parse_scenario(std::string_view text) {
    for (auto s : {Scenario::FullCity, Scenario::LocationSpecific, Scenario::SampleMeanBaseline}) {
        if (to_string(s) == text) return s;
    }
    throw ConfigError("unknown sampling scenario '" + std::string(text) + "'");
}

size_t block_length(Strategy s) {
    switch (s) {
        case Strategy::OneDay: return 1;
        case Strategy::ThreeDay: return 3;
        case Strategy::SevenDay: return 7;
    }
    return 1;
}

std::vector<size_t> sample_date_sequence(const std::vector<Date>& dates, Strategy strategy, size_t n_days, Rng& rng) {
    if (!std::is_sorted(dates.begin(), dates.end())) throw PreconditionError("dates must be ascending");
    if (n_days > dates.size()) throw ComputeError("not enough days to collect " + std::to_string(n_days));
    std::vector<size_t> seq;
    if (strategy == Strategy::OneDay) {
        std::vector<size_t> all(dates.size());
        std::iota(all.begin(), all.end(), size_t{0});
        // Partial Fisher-Yates: the first n_days positions are a uniform ordered draw.
        for (size_t i = 0; i < n_days; ++i) {
            const size_t j = i + static_cast<size_t>(rng.below(all.size() - i));
            std::swap(all[i], all[j]);
            seq.push_back(all[i]);
        }
        return seq;
    }
    const size_t len = block_length(strategy);
    if (dates.size() < len) throw ComputeError("fewer rows than one block");
    std::vector<char> used(dates.size(), 0);
    while (seq.size() < n_days) {
        bool placed = false;
        for (size_t attempt = 0; attempt < kMaxBlockAttempts && !placed; ++attempt) {
            const size_t start = static_cast<size_t>(rng.below(dates.size() - len + 1));
            if ((dates[start + len - 1] - dates[start]).count() != static_cast<long>(len - 1)) continue;
            bool overlap = false;
            for (size_t i = start; i < start + len; ++i) overlap = overlap || used[i];
            if (overlap) continue;
            for (size_t i = start; i < start + len; ++i) {
                used[i] = 1;
                if (seq.size() < n_days) seq.push_back(i);
            }
            placed = true;
        }
        if (!placed) {
            throw ComputeError("no free block of " + std::to_string(len) + " consecutive days after " +
                               std::to_string(kMaxBlockAttempts) + " attempts");
        }
    }
    return seq;
}

std::pair<double, double> full_city_weights(size_t n_other, size_t n_sampled, double weight_share) {
    if (n_other == 0 || n_sampled == 0) throw PreconditionError("full-city weights need both row kinds");
    if (!(weight_share > 0.0 && weight_share < 1.0)) throw ConfigError("weight_share must lie in (0, 1)");
    const double total = static_cast<double>(n_other + n_sampled);
    return {(1.0 - weight_share) * total / static_cast<double>(n_other),
            weight_share * total / static_cast<double>(n_sampled)};
}

void SamplingOptions::validate() const {
    if (max_days < 1) throw ConfigError("max_days must be >= 1");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (!(weight_share > 0.0 && weight_share < 1.0)) throw ConfigError("weight_share must lie in (0, 1)");
    for (size_t d : days) {
        if (d > max_days) throw ConfigError("day count " + std::to_string(d) + " exceeds max_days");
        if (d == 0 && scenario != Scenario::FullCity) throw ConfigError("d = 0 is only defined for full_city");
    }
}

namespace {

struct StationData {
    std::string id;
    std::vector<size_t> rows;  // ascending by date
    std::vector<Date> dates;
    std::vector<size_t> other_rows;  // LOGO training rows
};

struct Context {
    const FeatureTable& table;
    learners::ModelSpec spec;
    Scenario scenario;
    double weight_share;
    std::uint64_t seed;
};

std::vector<size_t> finite_rows(const FeatureTable& t, const std::vector<std::string>& stations) {
    const std::set<std::string> wanted(stations.begin(), stations.end());
    std::vector<size_t> out;
    for (size_t r = 0; r < t.rows(); ++r) {
        if (wanted.count(t.station_ids[r]) && std::isfinite(t.target[r])) out.push_back(r);
    }
    return out;
}

std::vector<StationData> station_data(const FeatureTable& table, size_t min_rows, std::vector<std::string>& skipped) {
    std::vector<StationData> out;
    for (const auto& fold : eval::logo_plan(table)) {
        StationData s;
        s.id = fold.test_stations.front();
        s.rows = finite_rows(table, {s.id});
        if (s.rows.size() < min_rows) {
            skipped.push_back(s.id + ": " + std::to_string(s.rows.size()) + " rows, needs " + std::to_string(min_rows));
            continue;
        }
        std::stable_sort(s.rows.begin(), s.rows.end(),
                         [&](size_t a, size_t b) { return table.dates[a] < table.dates[b]; });
        for (size_t r : s.rows) s.dates.push_back(table.dates[r]);
        s.other_rows = finite_rows(table, fold.train_stations);
        out.push_back(std::move(s));
    }
    return out;
}

std::uint64_t fit_seed(const Context& c, const StationData& s, size_t rep, size_t d) {
    if (d == 0) return derive_seed(c.seed, {fnv1a(s.id)});  // the LOGO fold seed
    return derive_seed(c.seed, {fnv1a(s.id), rep, d});
}

// Trains per scenario on the first d collected days and predicts the remaining rows.
eval::HeldOut run_point(const Context& c, const StationData& s, const std::vector<size_t>& sequence, size_t d,
                        size_t rep) {
    std::vector<char> sampled(s.rows.size(), 0);
    std::vector<size_t> sampled_rows;
    for (size_t i = 0; i < d; ++i) {
        sampled[sequence[i]] = 1;
        sampled_rows.push_back(s.rows[sequence[i]]);
    }
    std::sort(sampled_rows.begin(), sampled_rows.end());
    eval::HeldOut h;
    h.station_id = s.id;
    for (size_t i = 0; i < s.rows.size(); ++i) {
        if (!sampled[i]) h.rows.push_back(s.rows[i]);
    }
    std::sort(h.rows.begin(), h.rows.end());
    const auto test = c.table.select_rows(h.rows);
    h.y = test.target;
    h.dates = test.dates;

    if (c.scenario == Scenario::SampleMeanBaseline) {
        double m = 0.0;
        for (size_t r : sampled_rows) m += c.table.target[r];
        h.yhat.assign(h.y.size(), m / static_cast<double>(sampled_rows.size()));
        return h;
    }

    std::vector<double> weights;
    learners::ModelSpec spec = c.spec;
    if (c.scenario == Scenario::FullCity) {
        h.train_rows = s.other_rows;
        if (d > 0) {
            h.train_rows.insert(h.train_rows.end(), sampled_rows.begin(), sampled_rows.end());
            std::sort(h.train_rows.begin(), h.train_rows.end());
            const auto [w_other, w_sampled] = full_city_weights(s.other_rows.size(), d, c.weight_share);
            std::vector<char> is_sampled(c.table.rows(), 0);
            for (size_t r : sampled_rows) is_sampled[r] = 1;
            for (size_t r : h.train_rows) weights.push_back(is_sampled[r] ? w_sampled : w_other);
        }
    } else {
        // One station's handful of days cannot support grouped CV or column selection.
        h.train_rows = sampled_rows;
        spec.selection = learners::SelectionMethod::None;
        spec.tuning = learners::TuningMode::None;
    }
    const auto model = learners::fit_model(c.table.select_rows(h.train_rows), spec, weights, fit_seed(c, s, rep, d), 1);
    h.yhat = model.predict(test);
    for (double& v : h.yhat) v = std::max(v, 0.0);
    h.fit_log = model.fit_log;
    return h;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double ci_half_width(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return kZ95 * std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

learners::ModelSpec inner_spec(const FeatureTable& table, const learners::ModelSpec& spec, std::uint64_t seed,
                               int workers) {
    if (spec.tuning != learners::TuningMode::Outside) return spec;
    std::vector<std::string> long_term;
    for (const auto& f : eval::logo_plan(table)) long_term.push_back(f.test_stations.front());
    return eval::resolve_outside_tuning(table.select_rows(finite_rows(table, long_term)), spec,
                                        derive_seed(seed, {0}), workers)
        .first;
}

}  // namespace

SamplingCurve simulate_sampling(const FeatureTable& table, const learners::ModelSpec& spec,
                                const SamplingOptions& options) {
    options.validate();
    SamplingCurve curve;
    curve.model = std::string(learners::to_string(spec.kind));
    curve.strategy = options.strategy;
    curve.scenario = options.scenario;
    curve.metric = options.metric;
    curve.reps = options.reps;
    curve.weight_share = options.weight_share;

    std::vector<size_t> days = options.days;
    if (days.empty()) {
        if (options.scenario == Scenario::FullCity) days.push_back(0);
        for (size_t d = 1; d <= options.max_days; ++d) days.push_back(d);
    }
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());

    const auto stations = station_data(table, options.max_days + options.min_test_rows, curve.skipped);
    if (stations.empty()) throw ComputeError("no station has enough rows for the simulation");
    for (const auto& s : stations) curve.stations.push_back(s.id);
    const Context ctx{table, inner_spec(table, spec, options.seed, options.workers), options.scenario,
                      options.weight_share, options.seed};

    const size_t n_st = stations.size(), n_days = days.size(), reps = options.reps;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    // errors[(rep * n_st + s) * n_days + k]
    std::vector<double> errors(reps * n_st * n_days, nan);
    std::vector<std::string> failures(reps * n_st);
    const bool has_zero = days.front() == 0;

    // d = 0 does not depend on the repetition: one fit per station.
    std::vector<double> zero(n_st, nan);
    if (has_zero) {
        parallel_for(n_st, options.workers, [&](size_t s) {
            const auto h = run_point(ctx, stations[s], {}, 0, 0);
            zero[s] = eval::score(options.metric, h.y, h.yhat);
        });
    }
    parallel_for(reps * n_st, options.workers, [&](size_t item) {
        const size_t rep = item / n_st, s = item % n_st;
        const auto& st = stations[s];
        std::vector<size_t> sequence;
        try {
            Rng rng(derive_seed(options.seed, {fnv1a(st.id), rep, 0x5eed}));
            sequence = sample_date_sequence(st.dates, options.strategy, options.max_days, rng);
        } catch (const ComputeError& e) {
            failures[item] = st.id + " (rep " + std::to_string(rep) + "): " + e.what();
            return;
        }
        for (size_t k = 0; k < n_days; ++k) {
            const size_t d = days[k];
            double e = zero[s];
            if (d > 0) {
                const auto h = run_point(ctx, st, sequence, d, rep);
                e = eval::score(options.metric, h.y, h.yhat);
            }
            errors[item * n_days + k] = e;
        }
    });
    for (const auto& f : failures) {
        if (!f.empty()) curve.skipped.push_back(f);
    }

    for (size_t k = 0; k < n_days; ++k) {
        CurvePoint p;
        p.days = days[k];
        for (size_t rep = 0; rep < reps; ++rep) {
            std::vector<double> row(n_st);
            double sum = 0.0;
            size_t n = 0;
            for (size_t s = 0; s < n_st; ++s) {
                row[s] = errors[(rep * n_st + s) * n_days + k];
                if (std::isfinite(row[s])) {
                    sum += row[s];
                    ++n;
                }
            }
            if (n == 0) throw ComputeError("every station was skipped in repetition " + std::to_string(rep));
            p.rep_means.push_back(sum / static_cast<double>(n));
            p.station_errors.push_back(std::move(row));
        }
        p.mean = mean_of(p.rep_means);
        p.ci_half = ci_half_width(p.rep_means);
        curve.points.push_back(std::move(p));
    }
    return curve;
}

json SamplingCurve::to_json() const {
    json pts = json::array();
    for (const auto& p : points) {
        json se = json::array();
        for (const auto& row : p.station_errors) {
            json r = json::array();
            for (double v : row) r.push_back(std::isfinite(v) ? json(v) : json());
            se.push_back(std::move(r));
        }
        pts.push_back({{"days", p.days},
                       {"mean", p.mean},
                       {"ci_half", p.ci_half},
                       {"ci_low", p.mean - p.ci_half},
                       {"ci_high", p.mean + p.ci_half},
                       {"rep_means", p.rep_means},
                       {"station_errors", se}});
    }
    return {{"model", model},
            {"strategy", std::string(analysis::to_string(strategy))},
            {"scenario", std::string(analysis::to_string(scenario))},
            {"metric", std::string(eval::to_string(metric))},
            {"reps", reps},
            {"weight_share", weight_share},
            {"stations", stations},
            {"skipped", skipped},
            {"points", pts}};
}

std::string SamplingCurve::to_csv() const {
    std::ostringstream out;
    csv::write_row(out, {"days", "mean", "ci_low", "ci_high"});
    for (const auto& p : points) {
        csv::write_row(out, {std::to_string(p.days), csv::format_number(p.mean), csv::format_number(p.mean - p.ci_half),
                             csv::format_number(p.mean + p.ci_half)});
    }
    return out.str();
}

std::pair<eval::EvaluationReport, eval::EvaluationReport> ten_day_headline(const FeatureTable& table,
                                                                           const learners::ModelSpec& spec,
                                                                           std::uint64_t seed, int workers,
                                                                           size_t reps, size_t aadb_min_rows) {
    constexpr size_t kDays = 10;
    if (reps < 1) throw ConfigError("reps must be >= 1");
    std::vector<std::string> skipped;
    const auto stations = station_data(table, kDays + 30, skipped);
    if (stations.empty()) throw ComputeError("no station has enough rows for the ten-day run");
    const Context ctx{table, inner_spec(table, spec, seed, workers), Scenario::FullCity, 0.25, seed};

    const size_t n_st = stations.size();
    std::vector<std::optional<eval::HeldOut>> held(reps * n_st);
    parallel_for(reps * n_st, workers, [&](size_t item) {
        const size_t rep = item / n_st, s = item % n_st;
        Rng rng(derive_seed(seed, {fnv1a(stations[s].id), rep, 0x5eed}));
        const auto sequence = sample_date_sequence(stations[s].dates, Strategy::OneDay, kDays, rng);
        held[item] = run_point(ctx, stations[s], sequence, kDays, rep);
    });

    eval::EvalOptions eo;
    eo.aadb_min_rows = aadb_min_rows;
    std::pair<eval::EvaluationReport, eval::EvaluationReport> out;
    for (auto scale : {eval::Scale::Daily, eval::Scale::AADB}) {
        std::map<std::string, std::pair<eval::StationScore, size_t>> acc;
        std::set<std::string> excluded;
        for (size_t rep = 0; rep < reps; ++rep) {
            std::vector<eval::HeldOut> folds;
            for (size_t s = 0; s < n_st; ++s) folds.push_back(*held[rep * n_st + s]);
            const auto r = eval::score_held_out(folds, scale, eo);
            for (const auto& st : r.stations) {
                auto& [sum, n] = acc[st.station_id];
                sum.station_id = st.station_id;
                sum.n_test_rows += st.n_test_rows;
                sum.mae += st.mae;
                sum.smape += st.smape;
                ++n;
            }
            excluded.insert(r.excluded.begin(), r.excluded.end());
        }
        eval::EvaluationReport report;
        report.protocol = "ten_day";
        report.model = std::string(learners::to_string(spec.kind));
        report.window = table.window;
        report.scale = scale;
        report.excluded = skipped;
        report.excluded.insert(report.excluded.end(), excluded.begin(), excluded.end());
        for (const auto& s : stations) {
            const auto it = acc.find(s.id);
            if (it == acc.end()) continue;
            auto [sum, n] = it->second;
            const double k = static_cast<double>(n);
            report.stations.push_back({s.id, sum.n_test_rows / n, sum.mae / k, sum.smape / k});
        }
        eval::aggregate(report);
        (scale == eval::Scale::Daily ? out.first : out.second) = std::move(report);
    }
    return out;
}

}  // namespace bikevol::analysis
