// Acceptance run: one PASS/FAIL line per criterion, exit 1 when any asserted check fails.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "bikevol/analysis/importance.hpp"
#include "bikevol/analysis/sampling.hpp"
#include "bikevol/cli/cli.hpp"
#include "bikevol/core/parallel.hpp"
#include "bikevol/eval/evaluate.hpp"
#include "bikevol/eval/metrics.hpp"
#include "bikevol/ingest/synthetic.hpp"
#include "bikevol/ingest/trips.hpp"
#include "bikevol/learners/model.hpp"
#include "bikevol/pipeline/cleaning.hpp"
#include "bikevol/pipeline/features.hpp"
#include "bikevol/pipeline/preprocess.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace bikevol;
using learners::EstimatorKind;
using learners::ModelSpec;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::uint64_t kSeed = 7;

// Collects failed checks of one criterion with a short reason each.
struct Checks {
    std::vector<std::string> failures;
    std::vector<std::string> notes;
    void expect(bool ok, const std::string& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
        if (!ok && failures.size() == 5) failures.push_back("...");
    }
    void note(const std::string& text) { notes.push_back(text); }
};

struct Outcome {
    int id;
    std::string name;
    bool pass;
    double seconds;
};

std::vector<Outcome> outcomes;

double run_criterion(int id, const std::string& name, double limit_s, const std::function<void(Checks&)>& body) {
    Checks c;
    const auto t0 = Clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    c.expect(s < limit_s, "runtime " + std::to_string(s) + " s over the limit");
    const bool pass = c.failures.empty();
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << "  (" << std::fixed
              << std::setprecision(2) << s << " s, limit " << limit_s << " s)\n";
    for (const auto& n : c.notes) std::cout << "        " << n << "\n";
    for (const auto& f : c.failures) std::cout << "        failed: " << f << "\n";
    std::cout.flush();
    outcomes.push_back({id, name, pass, s});
    return s;
}

std::string fmt(double v, int digits = 3) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

bool close(double a, double b, double rel) { return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)}); }

ModelSpec untuned(EstimatorKind kind) {
    auto s = ModelSpec::defaults_for(kind);
    s.tuning = learners::TuningMode::None;
    return s;
}

// ---- 1 ----

void metric_exactness(Checks& c) {
    using eval::mae;
    using eval::smape;
    const std::vector<double> y{100, 200}, yhat{150, 150};
    c.expect(mae(y, yhat) == 50.0, "mae hand value");
    const double want = 0.5 * (50.0 / 125.0 + 50.0 / 175.0) * 100.0;
    c.expect(std::fabs(smape(y, yhat) - want) <= 1e-12 * want, "smape hand value");
    c.expect(smape(std::vector<double>{100}, std::vector<double>{0}) == 200.0, "smape maximum");
    c.expect(smape(std::vector<double>{0, 10}, std::vector<double>{0, 10}) == 0.0, "smape 0/0 term");
    c.expect(mae(y, y) == 0.0 && smape(y, y) == 0.0, "perfect prediction");

    Rng rng(kSeed);
    for (int i = 0; i < 10000; ++i) {
        const size_t n = 1 + rng.below(40);
        std::vector<double> a(n), b(n), ca(n), cb(n);
        const double k = std::exp(rng.uniform(-6, 6));
        for (size_t j = 0; j < n; ++j) {
            a[j] = rng.uniform() < 0.1 ? 0 : rng.uniform(0, 8000);
            b[j] = rng.uniform() < 0.1 ? 0 : rng.uniform(0, 8000);
            ca[j] = k * a[j];
            cb[j] = k * b[j];
        }
        const double s = smape(a, b);
        c.expect(s == smape(b, a), "symmetry at vector " + std::to_string(i));
        c.expect(close(s, smape(ca, cb), 1e-12), "scale invariance at vector " + std::to_string(i));
        c.expect(s >= 0 && s <= 200, "range at vector " + std::to_string(i));
    }
    c.note("hand values exact; 10000 random vectors symmetric and scale invariant");
}

// ---- 2 ----

ingest::Trip crafted(double meters, double seconds) {
    ingest::Trip t;
    t.bike_id = "b";
    t.origin = {52.5, 13.4};
    t.destination = {52.51, 13.4};
    t.start = Timestamp(make_date(2019, 6, 12)) + std::chrono::hours(8);
    t.end = t.start + std::chrono::seconds(static_cast<long long>(seconds));
    t.routed_distance = meters;
    t.mean_speed = meters / seconds * 3.6;
    return t;
}

void cleaning_exactness(Checks& c) {
    using pipeline::RemovalBucket;
    // One violator per rule, in rule order, then six clean trips.
    const std::vector<std::pair<ingest::Trip, RemovalBucket>> bad = {
        {crafted(60, 200), RemovalBucket::MinDistance},    // also too slow; charged to the first rule
        {crafted(50'000, 5'000), RemovalBucket::MaxDistance},
        {crafted(200, 60), RemovalBucket::MinDuration},
        {crafted(40'000, 40'000), RemovalBucket::MaxDuration},
        {crafted(1'000, 3'600), RemovalBucket::MinSpeed},
        {crafted(10'000, 600), RemovalBucket::MaxSpeed},
    };
    std::vector<ingest::Trip> trips;
    for (const auto& [t, b] : bad) trips.push_back(t);
    for (auto [m, s] : {std::pair{3000.0, 1200.0}, {150.0, 150.0}, {44'000.0, 35'000.0}, {800.0, 121.0},
                        {5000.0, 8900.0}, {12'000.0, 1100.0}})
        trips.push_back(crafted(m, s));

    const auto [kept, report] = pipeline::clean_trips(trips, {});
    c.expect(report.input == 12, "input count");
    c.expect(report.total_removed() == 6, "removed " + std::to_string(report.total_removed()) + " trips");
    c.expect(kept.size() == 6 && report.remaining == 6, "six trips kept");
    c.expect(report.remaining + report.total_removed() == report.input, "conservation");
    c.expect(report.removed_by(RemovalBucket::Unroutable) == 0, "no unroutable trips");
    for (const auto& [t, b] : bad)
        c.expect(report.removed_by(b) == 1, std::string(pipeline::to_string(b)) + " attribution");
    for (size_t i = 0; i < kept.size(); ++i) c.expect(*kept[i].routed_distance == *trips[6 + i].routed_distance, "kept order");
    c.note("removed 6 of 12, one per rule");
}

// ---- 3 ----

pipeline::FeatureTable city_table(int workers) {
    const auto city = ingest::generate_synthetic_city(kSeed, {});
    const auto& bundle = city.bundle;
    const auto raw = bundle.trips.empty() ? ingest::reconstruct_trips(bundle.snapshots) : bundle.trips;
    std::vector<ingest::Trip> routed(raw.size());
    parallel_for(raw.size(), workers, [&](size_t i) { routed[i] = ingest::route_trip(bundle.street_graph, raw[i]); });
    const auto cleaned = pipeline::clean_trips(routed, {}).first;
    return pipeline::assemble(bundle, cleaned, CountWindow::FullDay, {}, workers);
}

std::vector<std::string> long_term_stations(const pipeline::FeatureTable& t) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (size_t i = 0; i < t.rows(); ++i)
        if (t.station_kinds[i] == StationKind::LongTerm && seen.insert(t.station_ids[i]).second) out.push_back(t.station_ids[i]);
    return out;
}

// No-leakage and coverage checks shared by every LOGO run.
void check_logo_run(Checks& c, const pipeline::FeatureTable& t, const eval::LogoRun& run, const std::string& label) {
    const auto stations = long_term_stations(t);
    std::map<std::string, int> held_out;
    for (const auto& f : run.plan) {
        for (const auto& s : f.test_stations) ++held_out[s];
        for (const auto& s : f.test_stations)
            c.expect(std::find(f.train_stations.begin(), f.train_stations.end(), s) == f.train_stations.end(),
                     label + ": " + s + " in its own training plan");
    }
    c.expect(held_out.size() == stations.size(), label + ": plan covers every station");
    for (const auto& [s, n] : held_out) c.expect(n == 1, label + ": " + s + " held out " + std::to_string(n) + " times");
    for (const auto& f : run.folds) {
        for (size_t r : f.train_rows) {
            if (t.station_ids[r] == f.station_id) {
                c.expect(false, label + ": test station " + f.station_id + " in training rows");
                break;
            }
        }
        c.expect(pipeline::preprocess(t.select_rows(f.train_rows)).log == f.fit_log,
                 label + ": fold " + f.station_id + " preprocessing differs from training-only refit");
    }
}

// ---- 6 (d) ----

void weight_mass(Checks& c, const pipeline::FeatureTable& t, double share) {
    std::map<std::string, size_t> rows;
    for (size_t i = 0; i < t.rows(); ++i)
        if (t.station_kinds[i] == StationKind::LongTerm) ++rows[t.station_ids[i]];
    size_t total_rows = 0;
    for (const auto& [s, n] : rows) total_rows += n;
    size_t cases = 0;
    double worst_ulps = 0;
    for (const auto& [s, n] : rows) {
        const size_t n_other = total_rows - n;
        for (size_t d = 1; d <= 28; ++d) {
            const auto [wo, ws] = analysis::full_city_weights(n_other, d, share);
            // Accumulated exactly as a fit sees the weights, row by row.
            double other = 0, sampled = 0;
            for (size_t i = 0; i < n_other; ++i) other += wo;
            for (size_t i = 0; i < d; ++i) sampled += ws;
            const double expected_total = static_cast<double>(n_other + d);
            // w_sampled * d rounds to within a few ulps of share * total; bit equality is not attainable.
            const double direct = ws * static_cast<double>(d), target = share * expected_total;
            const double ulps = std::fabs(direct - target) / (std::numeric_limits<double>::epsilon() * target);
            worst_ulps = std::max(worst_ulps, ulps);
            c.expect(ulps <= 4, "sampled mass for " + s + " d=" + std::to_string(d));
            c.expect(close(other + sampled, expected_total, 1e-12) && close(sampled / (other + sampled), share, 1e-12),
                     "accumulated mass for " + s + " d=" + std::to_string(d));
            ++cases;
        }
    }
    c.note("(d) weight mass: " + std::to_string(cases) + " station/day cases, sampled share " + fmt(share, 2) +
           ", worst sampled-mass deviation " + fmt(worst_ulps, 2) + " ulp");
}

// ---- 8 ----

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int cli(std::vector<std::string> args, std::string& err) {
    args.insert(args.begin(), "bikevol");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, e;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, e);
    err = e.str();
    return code;
}

void determinism(Checks& c, const fs::path& scratch) {
    fs::create_directories(scratch);
    const auto config = scratch / "run.json";
    {
        std::ofstream f(config);
        f << json{{"seed", kSeed}, {"model", {{"kind", "RegularizedBoosting"}, {"tuning", {{"mode", "none"}}}}}}.dump(2);
    }
    const std::vector<std::pair<std::string, std::string>> runs = {{"run1", "1"}, {"run2", "1"}, {"run3", "8"}};
    for (const auto& [name, workers] : runs) {
        const auto dir = scratch / name;
        fs::remove_all(dir);
        std::string err;
        const std::vector<std::vector<std::string>> steps = {
            {"synth", "--out", (dir / "bundle").string()},
            {"features", "--bundle", (dir / "bundle").string(), "--out", (dir / "table.csv").string()},
            {"eval-logo", "--table", (dir / "table.csv").string(), "--out", (dir / "logo").string()},
        };
        for (auto step : steps) {
            std::vector<std::string> args = {"--config", config.string(), "--workers", workers};
            args.insert(args.end(), step.begin(), step.end());
            const int code = cli(args, err);
            c.expect(code == 0, name + " " + step[0] + " exited " + std::to_string(code) + ": " + err);
            if (code != 0) return;
        }
    }
    size_t files = 0;
    const auto base = scratch / "run1";
    for (const auto& e : fs::recursive_directory_iterator(base)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), base);
        const auto ref = slurp(e.path());
        for (const char* other : {"run2", "run3"})
            c.expect(slurp(scratch / other / rel) == ref, rel.string() + " differs in " + other);
        ++files;
    }
    c.expect(files > 0, "no output files");
    c.note(std::to_string(files) + " files byte-identical across two runs at --workers 1 and one at --workers 8");
}

// ---- 9 ----

void reconstruction_and_routing(Checks& c) {
    Rng rng(kSeed);
    const Timestamp t0 = Timestamp(make_date(2019, 5, 2)) + std::chrono::hours(6);
    size_t gap_trips = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const size_t bikes = 1 + rng.below(8), minutes = 2 + rng.below(90);
        std::vector<ingest::AvailabilitySnapshot> snaps;
        for (size_t m = 0; m < minutes; ++m) {
            ingest::AvailabilitySnapshot s{t0 + std::chrono::minutes(m), {}};
            for (size_t b = 0; b < bikes; ++b)
                if (rng.uniform() < 0.6) s.bikes.push_back({"bike" + std::to_string(b), {52.5 + rng.uniform(0, 0.01), 13.4}});
            snaps.push_back(std::move(s));
        }
        const auto want = oracle::gap_trips(snaps);
        const auto got = ingest::reconstruct_trips(snaps);
        gap_trips += want.size();
        bool same = got.size() == want.size();
        for (size_t i = 0; same && i < got.size(); ++i) {
            same = got[i].bike_id == want[i].bike && got[i].start.time_since_epoch().count() == want[i].start &&
                   got[i].end.time_since_epoch().count() == want[i].end && got[i].origin == want[i].from &&
                   got[i].destination == want[i].to;
        }
        c.expect(same, "stream " + std::to_string(trial) + " differs from the gap oracle");
    }

    size_t routed = 0, unroutable = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = oracle::random_graph(rng, 2 + rng.below(7));
        const GeoPoint o{52.5 + rng.uniform(0, 0.01), 13.4 + rng.uniform(0, 0.015)};
        const GeoPoint d{52.5 + rng.uniform(0, 0.01), 13.4 + rng.uniform(0, 0.015)};
        const auto from = oracle::nearest_bicycle_node(g, o), to = oracle::nearest_bicycle_node(g, d);
        const auto r = ingest::route_trip(g, ingest::Trip{"t", o, d, t0, t0 + std::chrono::minutes(30), {}, {}, {}, false});
        const auto best = (from && to) ? oracle::brute_shortest(g, *from, *to) : std::nullopt;
        c.expect(r.unroutable == !best.has_value(), "graph " + std::to_string(trial) + " routability");
        if (!best || r.unroutable) {
            ++unroutable;
            continue;
        }
        ++routed;
        const double expected = *best + haversine_distance(o, g.nodes[*from]) + haversine_distance(d, g.nodes[*to]);
        c.expect(close(*r.routed_distance, expected, 1e-9), "graph " + std::to_string(trial) + " route length");
    }
    c.note("1000 streams (" + std::to_string(gap_trips) + " trips) match the oracle; " + std::to_string(routed) +
           " routes optimal, " + std::to_string(unroutable) + " unroutable on 200 graphs");
}

// ---- 7 ----

std::vector<double> fit_predict(EstimatorKind kind, const json& h, const learners::DataView& x, std::span<const double> y,
                                std::span<const double> w) {
    auto est = learners::make_estimator(kind, h);
    est->fit(x, y, w, 1);
    return est->predict(x);
}

learners::Matrix random_matrix(Rng& rng, size_t n, size_t p) {
    learners::Matrix m;
    m.rows = n;
    m.columns.assign(p, std::vector<double>(n));
    for (auto& col : m.columns)
        for (auto& v : col) v = rng.uniform(-2, 2);
    return m;
}

std::vector<double> target(Rng& rng, const learners::Matrix& m) {
    std::vector<double> y(m.rows);
    for (size_t i = 0; i < m.rows; ++i) {
        y[i] = 5 + 3 * m.columns[0][i] + rng.normal();
        if (m.columns.size() > 1) y[i] += 2 * m.columns[1][i] * m.columns[1][i];
    }
    return y;
}

void learner_oracles(Checks& c) {
    Rng rng(kSeed);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = random_matrix(rng, 20 + rng.below(60), 1 + rng.below(5));
        const auto y = target(rng, x);
        std::vector<double> w(y.size());
        for (auto& v : w) v = trial % 2 ? 1.0 : rng.uniform(0.2, 3);
        const auto got = fit_predict(EstimatorKind::DecisionTree, {{"max_depth", 1}}, x.view(), y, w);
        const auto want = oracle::brute_stump(x.columns, y, w);
        bool same = true;
        for (size_t i = 0; i < got.size(); ++i) same = same && close(got[i], want[i], 1e-9);
        c.expect(same, "depth-1 tree differs from brute force in trial " + std::to_string(trial));
    }

    for (int trial = 0; trial < 10; ++trial) {
        const auto x = random_matrix(rng, 150, 4);
        const auto y = target(rng, x);
        std::vector<double> w(y.size());
        double swy = 0, sw = 0;
        for (size_t i = 0; i < w.size(); ++i) {
            w[i] = rng.uniform(0.2, 3);
            swy += w[i] * y[i];
            sw += w[i];
        }
        for (const json& gamma : {json("inf"), json(1e300)}) {
            bool collapsed = true;
            for (double p : fit_predict(EstimatorKind::RegularizedBoosting, {{"gamma", gamma}, {"n_estimators", 50}},
                                        x.view(), y, w))
                collapsed = collapsed && close(p, swy / sw, 1e-12);
            c.expect(collapsed, "gamma " + gamma.dump() + " did not collapse to the base score");
        }
    }

    for (auto kind : {EstimatorKind::Linear, EstimatorKind::DecisionTree}) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto x = random_matrix(rng, 80, 3);
            const auto y = target(rng, x);
            std::vector<double> w(y.size());
            std::vector<size_t> rows;
            std::vector<double> dy;
            for (size_t i = 0; i < y.size(); ++i) {
                const size_t times = 1 + rng.below(4);
                w[i] = static_cast<double>(times);
                for (size_t k = 0; k < times; ++k) {
                    rows.push_back(i);
                    dy.push_back(y[i]);
                }
            }
            const json h = kind == EstimatorKind::DecisionTree ? json{{"max_depth", 5}, {"min_samples_leaf", 3}} : json::object();
            auto weighted = learners::make_estimator(kind, h);
            weighted->fit(x.view(), y, w, 1);
            const auto dx = learners::take_rows(x.view(), rows);
            auto duplicated = learners::make_estimator(kind, h);
            duplicated->fit(dx.view(), dy, {}, 1);
            const auto a = weighted->predict(x.view()), b = duplicated->predict(x.view());
            bool same = true;
            for (size_t i = 0; i < a.size(); ++i) same = same && close(a[i], b[i], 1e-9);
            c.expect(same, std::string(learners::to_string(kind)) + " weights differ from duplication in trial " +
                               std::to_string(trial));
        }
    }
    c.note("100 stumps, 20 gamma collapses, 40 weight/duplication pairs");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks on the synthetic city"};
    std::string scratch = (fs::temp_directory_path() / "bikevol_acceptance").string();
    int workers = 0;
    app.add_option("--scratch", scratch, "Directory for CLI outputs");
    app.add_option("--workers", workers, "Worker threads (0 = all cores)");
    CLI11_PARSE(app, argc, argv);

    run_criterion(1, "metric exactness", 5, metric_exactness);
    run_criterion(2, "cleaning exactness", 1, cleaning_exactness);

    const auto t0 = Clock::now();
    const auto table = city_table(workers);
    std::cout << "      synthetic city: " << long_term_stations(table).size() << " long-term stations, " << table.rows()
              << " rows, " << table.cols() << " features, built in "
              << fmt(std::chrono::duration<double>(Clock::now() - t0).count(), 2) << " s\n";
    const eval::EvalOptions eval_opts{kSeed, workers, 30};

    run_criterion(3, "LOGO integrity", 30, [&](Checks& c) {
        const auto stations = long_term_stations(table);
        c.expect(stations.size() == 20, "city has " + std::to_string(stations.size()) + " long-term stations");
        const auto spec = ModelSpec::defaults_for(EstimatorKind::BaselineMean);
        const auto run = eval::logo_predict(table, spec, eval_opts);
        check_logo_run(c, table, run, "BaselineMean");
        c.expect(run.folds.size() == stations.size(), "one fold per station");
        auto report = eval::score_held_out(run.folds, eval::Scale::Daily, eval_opts);
        std::map<std::string, oracle::StationError> want;
        for (const auto& e : oracle::baseline_logo(table)) want[e.station] = e;
        c.expect(report.stations.size() == want.size(), "report covers every station");
        double worst = 0;
        for (const auto& s : report.stations) {
            const auto& e = want.at(s.station_id);
            c.expect(close(s.mae, e.mae, 1e-9) && close(s.smape, e.smape, 1e-9), s.station_id + " differs from closed form");
            worst = std::max({worst, std::fabs(s.mae - e.mae) / e.mae, std::fabs(s.smape - e.smape) / e.smape});
        }
        c.note(std::to_string(run.folds.size()) + " folds leak-free; worst relative gap to closed form " + [&] {
            std::ostringstream o;
            o << std::scientific << std::setprecision(1) << worst;
            return o.str();
        }());
    });

    std::map<EstimatorKind, eval::EvaluationReport> logo;
    const double t4 = run_criterion(4, "model-family ordering", 600, [&](Checks& c) {
        for (auto kind : {EstimatorKind::BaselineMean, EstimatorKind::Linear, EstimatorKind::DecisionTree,
                          EstimatorKind::RandomForest, EstimatorKind::GradientBoosting, EstimatorKind::RegularizedBoosting}) {
            const auto run = eval::logo_predict(table, untuned(kind), eval_opts);
            check_logo_run(c, table, run, std::string(learners::to_string(kind)));
            auto r = eval::score_held_out(run.folds, eval::Scale::Daily, eval_opts);
            eval::aggregate(r);
            logo[kind] = r;
            c.note(std::string(learners::to_string(kind)) + ": daily SMAPE " + fmt(r.smape) + ", MAE " + fmt(r.mae, 1));
        }
        const double base = logo.at(EstimatorKind::BaselineMean).smape;
        for (auto kind : {EstimatorKind::RandomForest, EstimatorKind::GradientBoosting, EstimatorKind::RegularizedBoosting})
            c.expect(logo.at(kind).smape < base, std::string(learners::to_string(kind)) + " not below BaselineMean");
        const double ratio = logo.at(EstimatorKind::RegularizedBoosting).smape / base;
        c.expect(ratio <= 0.8, "RegularizedBoosting / BaselineMean = " + fmt(ratio));
        c.note("RegularizedBoosting / BaselineMean = " + fmt(ratio) + " (needs <= 0.8)");
    });

    run_criterion(5, "GPI fidelity", 300, [&](Checks& c) {
        auto t = pipeline::preprocess(table).table;
        // Column of the group with the most distinct values.
        auto pick = [&](pipeline::FeatureGroup g) {
            size_t best = t.columns.size(), most = 1;
            for (size_t j = 0; j < t.columns.size(); ++j) {
                if (t.columns[j].group != g) continue;
                const std::set<double> distinct(t.columns[j].values.begin(), t.columns[j].values.end());
                if (distinct.size() > most) most = distinct.size(), best = j;
            }
            if (best == t.columns.size()) throw std::runtime_error("no varying column in the group");
            return best;
        };
        const size_t crowd = pick(pipeline::FeatureGroup::Crowdsourced), time = pick(pipeline::FeatureGroup::Time);
        auto z = [&](size_t j) {
            const auto& v = t.columns[j].values;
            double m = 0, s = 0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            for (double x : v) s += (x - m) * (x - m);
            s = std::sqrt(s / static_cast<double>(v.size()));
            std::vector<double> out;
            for (double x : v) out.push_back((x - m) / s);
            return out;
        };
        const auto zc = z(crowd), zt = z(time);
        Rng rng(kSeed);
        for (size_t i = 0; i < t.rows(); ++i)
            t.target[i] = std::max(0.0, 3000 + 900 * zc[i] + 600 * zt[i] + 100 * rng.normal());
        c.note("target driven by " + t.columns[crowd].name + " (Crowdsourced) and " + t.columns[time].name + " (Time)");

        analysis::GpiOptions o;
        o.seed = kSeed;
        o.workers = workers;
        const auto gi = analysis::grouped_permutation_importance(t, untuned(EstimatorKind::RegularizedBoosting), o);
        auto groups = gi.groups;
        std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.gain > b.gain; });
        std::ostringstream ranking;
        for (const auto& g : groups) ranking << pipeline::to_string(g.group) << " " << fmt(g.gain, 1) << " ";
        c.note("ranking: " + ranking.str());
        const std::set<pipeline::FeatureGroup> drivers = {pipeline::FeatureGroup::Crowdsourced, pipeline::FeatureGroup::Time};
        c.expect(groups.size() >= 3 && drivers.count(groups[0].group) && drivers.count(groups[1].group),
                 "Crowdsourced and Time are not the top two");
        double lowest_driver = std::min(groups[0].ci_low, groups[1].ci_low), highest_other = -1e300;
        for (size_t i = 2; i < groups.size(); ++i) highest_other = std::max(highest_other, groups[i].ci_high);
        c.expect(lowest_driver > highest_other, "driver and non-driver confidence intervals overlap");
        c.note("lowest driver CI bound " + fmt(lowest_driver, 1) + " vs highest other CI bound " + fmt(highest_other, 1));
    });

    run_criterion(6, "sampling simulator", 900, [&](Checks& c) {
        const auto spec = untuned(EstimatorKind::RegularizedBoosting);
        analysis::SamplingOptions o;
        o.seed = kSeed;
        o.workers = workers;
        o.max_days = 10;
        o.days = {0, 10};
        o.reps = 10;
        const auto curve = analysis::simulate_sampling(table, spec, o);
        c.expect(curve.skipped.empty(), "stations skipped");

        // (a) d = 0 against the LOGO run of criterion 4 (same spec and seed).
        auto it = logo.find(EstimatorKind::RegularizedBoosting);
        const auto reference = it != logo.end() ? it->second : eval::logo_evaluate(table, spec, eval::Scale::Daily, eval_opts);
        std::map<std::string, double> by_station;
        for (const auto& s : reference.stations) by_station[s.station_id] = s.smape;
        const auto& d0 = curve.points.at(0);
        for (size_t i = 0; i < curve.stations.size(); ++i)
            for (size_t r = 0; r < o.reps; ++r)
                c.expect(close(d0.station_errors[r][i], by_station.at(curve.stations[i]), 1e-9),
                         "(a) d=0 differs from LOGO at " + curve.stations[i]);
        c.expect(close(d0.mean, reference.smape, 1e-9), "(a) d=0 mean differs from LOGO");
        c.note("(a) d=0 mean SMAPE " + fmt(d0.mean) + " vs LOGO " + fmt(reference.smape));

        // (b)
        const auto& d10 = curve.points.at(1);
        const double ratio = d10.mean / d0.mean;
        c.expect(ratio <= 0.6, "(b) d=10 / d=0 = " + fmt(ratio));
        c.note("(b) OneDay d=10 mean SMAPE " + fmt(d10.mean) + " +/- " + fmt(d10.ci_half) + ", ratio to d=0 " +
               fmt(ratio) + " (needs <= 0.6)");

        // (c) reported only; fewer repetitions for the block strategies to fit the time budget.
        std::map<analysis::Strategy, std::pair<double, double>> at10;
        at10[analysis::Strategy::OneDay] = {d10.mean, d10.ci_half};
        for (auto s : {analysis::Strategy::ThreeDay, analysis::Strategy::SevenDay}) {
            auto ob = o;
            ob.strategy = s;
            ob.days = {10};
            ob.reps = 3;
            const auto p = analysis::simulate_sampling(table, spec, ob).points.at(0);
            at10[s] = {p.mean, p.ci_half};
        }
        std::ostringstream line;
        for (const auto& [s, v] : at10) line << analysis::to_string(s) << " " << fmt(v.first) << " +/- " << fmt(v.second) << "  ";
        const bool ordered = at10[analysis::Strategy::OneDay].first <= at10[analysis::Strategy::ThreeDay].first &&
                             at10[analysis::Strategy::ThreeDay].first <= at10[analysis::Strategy::SevenDay].first;
        c.note("(c) d=10: " + line.str() + (ordered ? "(ordered)" : "(not ordered; reported only)"));

        weight_mass(c, table, o.weight_share);
    });

    run_criterion(7, "learner oracles", 60, learner_oracles);

    run_criterion(8, "determinism", std::max(2 * t4, 1.0), [&](Checks& c) { determinism(c, scratch); });

    run_criterion(9, "trip reconstruction and routing", 60, reconstruction_and_routing);

    size_t passed = 0;
    for (const auto& o : outcomes) passed += o.pass;
    std::cout << passed << "/" << outcomes.size() << " criteria passed\n";
    return passed == outcomes.size() ? 0 : 1;
}
