#include <cmath>
#include <set>

#include "bikevol/analysis/importance.hpp"
#include "bikevol/analysis/sampling.hpp"
#include "bikevol/core/errors.hpp"
#include "bikevol/eval/evaluate.hpp"
#include "bikevol/pipeline/preprocess.hpp"
#include "doctest.h"
#include "toy_table.hpp"

using namespace bikevol;
using namespace bikevol::analysis;
using learners::EstimatorKind;
using learners::ModelSpec;
using pipeline::FeatureGroup;
using pipeline::FeatureTable;

namespace {

ModelSpec rb(size_t trees = 30) {
    auto s = ModelSpec::defaults_for(EstimatorKind::RegularizedBoosting);
    s.tuning = learners::TuningMode::None;
    s.selection = learners::SelectionMethod::None;
    s.hyperparameters = {{"n_estimators", trees}};
    return s;
}

ModelSpec spec_of(EstimatorKind kind) {
    auto s = ModelSpec::defaults_for(kind);
    s.tuning = learners::TuningMode::None;
    s.selection = learners::SelectionMethod::None;
    return s;
}

// Target driven by the Weather column only; two noise groups ride along.
FeatureTable weather_only(std::uint64_t seed) {
    Rng rng(seed);
    FeatureTable t;
    t.columns = {{"temp", FeatureGroup::Weather, {}}, {"noise_a", FeatureGroup::Holiday, {}}, {"noise_b", FeatureGroup::Motorized, {}}};
    for (int s = 0; s < 5; ++s)
        for (int k = 0; k < 40; ++k) {
            const double temp = rng.uniform(0, 30);
            t.station_ids.push_back("S" + std::to_string(s));
            t.station_kinds.push_back(StationKind::LongTerm);
            t.dates.push_back(make_date(2019, 5, 1) + std::chrono::days(k));
            t.target.push_back(500 + 60 * temp + 10 * rng.normal());
            t.columns[0].values.push_back(temp);
            t.columns[1].values.push_back(rng.uniform());
            t.columns[2].values.push_back(rng.uniform());
        }
    return t;
}

const GroupScore& group(const GroupImportance& g, FeatureGroup which) {
    for (const auto& s : g.groups)
        if (s.group == which) return s;
    FAIL("group missing");
    return g.groups.front();
}

}  // namespace

TEST_CASE("GPI finds the only informative group") {
    const auto t = weather_only(1);
    GpiOptions o;
    o.n_permutations = 20;
    o.repeats = 2;
    o.seed = 3;
    o.workers = 2;
    const auto g = grouped_permutation_importance(t, rb(), o);
    CHECK(g.n_folds == 10);
    CHECK(g.groups.size() == 3);
    const auto& w = group(g, FeatureGroup::Weather);
    CHECK(w.gain > 0);
    CHECK(w.fold_gains.size() == 10);
    for (auto other : {FeatureGroup::Holiday, FeatureGroup::Motorized}) {
        const auto& s = group(g, other);
        CHECK(s.ci_high < w.ci_low);
        CHECK(std::fabs(s.gain) < 0.05 * w.gain);
    }
    o.workers = 1;
    CHECK(grouped_permutation_importance(t, rb(), o).to_json() == g.to_json());
    CHECK(g.to_csv().rfind("group,n_columns,gain,ci_low,ci_high\n", 0) == 0);
}

TEST_CASE("GPI: feature-blind models and dropped groups gain nothing") {
    auto t = weather_only(2);
    GpiOptions o;
    o.n_permutations = 5;
    o.repeats = 1;
    o.k = 3;
    for (const auto& s : grouped_permutation_importance(t, spec_of(EstimatorKind::BaselineMean), o).groups) {
        CHECK(s.gain == 0.0);
        CHECK(s.n_used_columns == 1);
    }

    // An exact copy of temp is dropped by preprocessing inside every fold.
    t.columns.push_back({"temp_copy", FeatureGroup::Time, t.columns[0].values});
    const auto g = grouped_permutation_importance(t, rb(), o);
    const auto& copy = group(g, FeatureGroup::Time);
    CHECK(copy.n_columns == 1);
    CHECK(copy.n_used_columns == 0);
    CHECK(copy.gain == 0.0);

    o.groups = {FeatureGroup::Crowdsourced};
    CHECK_THROWS_AS(grouped_permutation_importance(t, rb(), o), PreconditionError);
    o.groups.clear();
    t.columns[1].values[0] = std::nan("");
    CHECK_THROWS_AS(grouped_permutation_importance(t, rb(), o), PreconditionError);
}

TEST_CASE("date sequences") {
    std::vector<Date> dates;
    for (int k = 0; k < 60; ++k)
        if (k % 10 != 9) dates.push_back(make_date(2019, 5, 1) + std::chrono::days(k));  // gaps every 10 days
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        for (auto strategy : {Strategy::OneDay, Strategy::ThreeDay, Strategy::SevenDay}) {
            const size_t n = 1 + rng.below(20);
            const auto seq = sample_date_sequence(dates, strategy, n, rng);
            REQUIRE(seq.size() == n);
            CHECK(std::set<size_t>(seq.begin(), seq.end()).size() == n);
            const size_t L = block_length(strategy);
            for (size_t b = 0; b < n; b += L) {
                for (size_t i = b + 1; i < std::min(n, b + L); ++i) {
                    CHECK(dates[seq[i]] - dates[seq[i - 1]] == std::chrono::days(1));
                }
            }
        }
    }
    std::vector<Date> sparse;
    for (int k = 0; k < 10; ++k) sparse.push_back(make_date(2019, 5, 1) + std::chrono::days(2 * k));
    CHECK_THROWS_AS(sample_date_sequence(sparse, Strategy::ThreeDay, 3, rng), ComputeError);
    CHECK_THROWS_AS(sample_date_sequence(sparse, Strategy::OneDay, 11, rng), ComputeError);
}

TEST_CASE("full-city weights put the requested share on sampled rows") {
    for (size_t other : {1, 7, 100, 3953})
        for (size_t sampled : {1, 3, 10, 28})
            for (double share : {0.25, 0.1, 0.5, 0.9}) {
                const auto [wo, ws] = full_city_weights(other, sampled, share);
                const double so = wo * static_cast<double>(other), ss = ws * static_cast<double>(sampled);
                CHECK(ss / (so + ss) == doctest::Approx(share).epsilon(1e-14));
                CHECK(so + ss == doctest::Approx(static_cast<double>(other + sampled)).epsilon(1e-14));
            }
}

TEST_CASE("full-city at zero days reproduces LOGO") {
    const auto t = toy::toy_table();
    SamplingOptions o;
    o.days = {0, 2};
    o.reps = 2;
    o.max_days = 5;
    o.min_test_rows = 10;
    o.seed = 6;
    const auto curve = simulate_sampling(t, rb(), o);
    REQUIRE(curve.points.front().days == 0);
    const auto logo = eval::logo_evaluate(t, rb(), eval::Scale::Daily, {6, 1});
    CHECK(curve.points[0].mean == doctest::Approx(logo.smape).epsilon(1e-12));
    for (size_t i = 0; i < curve.stations.size(); ++i)
        CHECK(curve.points[0].station_errors[0][i] == doctest::Approx(logo.stations[i].smape).epsilon(1e-12));
    CHECK(curve.points[0].ci_half == 0.0);
    CHECK(curve.points[1].rep_means.size() == 2);

    o.workers = 3;
    CHECK(simulate_sampling(t, rb(), o).to_json() == curve.to_json());
    CHECK(curve.to_csv().rfind("days,mean,ci_low,ci_high\n", 0) == 0);
}

TEST_CASE("location-specific mean model matches the sample-mean baseline") {
    const auto t = toy::toy_table();
    SamplingOptions o;
    o.days = {1, 3, 6};
    o.reps = 3;
    o.max_days = 6;
    o.min_test_rows = 10;
    o.metric = eval::Metric::MAE;
    o.scenario = Scenario::LocationSpecific;
    const auto loc = simulate_sampling(t, spec_of(EstimatorKind::BaselineMean), o);
    o.scenario = Scenario::SampleMeanBaseline;
    const auto base = simulate_sampling(t, rb(), o);
    REQUIRE(loc.points.size() == 3);
    for (size_t p = 0; p < 3; ++p)
        for (size_t r = 0; r < 3; ++r)
            for (size_t s = 0; s < loc.stations.size(); ++s)
                CHECK(loc.points[p].station_errors[r][s] == doctest::Approx(base.points[p].station_errors[r][s]).epsilon(1e-12));
}

TEST_CASE("sample-mean baseline is exact on constant counts") {
    auto t = toy::toy_table();
    for (size_t i = 0; i < t.rows(); ++i) t.target[i] = 1000;
    SamplingOptions o;
    o.days = {1, 4};
    o.reps = 2;
    o.max_days = 4;
    o.min_test_rows = 10;
    o.metric = eval::Metric::MAE;
    o.scenario = Scenario::SampleMeanBaseline;
    for (const auto& p : simulate_sampling(t, rb(), o).points) CHECK(p.mean == 0.0);
}

TEST_CASE("stations without enough rows are skipped") {
    const auto t = toy::toy_table();
    SamplingOptions o;
    o.days = {1};
    o.reps = 1;
    o.max_days = 10;
    o.min_test_rows = 85;
    const auto curve = simulate_sampling(t, rb(), o);
    CHECK(curve.stations == std::vector<std::string>{"S3", "S4"});
    CHECK(curve.skipped.size() == 2);
    o.reps = 0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("ten-day headline") {
    const auto t = toy::toy_table();
    const auto [daily, aadb] = ten_day_headline(t, rb(), 8, 1, 1);
    const auto again = ten_day_headline(t, rb(), 8, 2, 1);
    CHECK(daily.to_json() == again.first.to_json());
    CHECK(aadb.to_json() == again.second.to_json());
    CHECK(daily.protocol == "ten_day");
    const auto logo = eval::logo_evaluate(t, rb(), eval::Scale::Daily, {8, 1});
    CHECK(daily.smape < logo.smape);
}
