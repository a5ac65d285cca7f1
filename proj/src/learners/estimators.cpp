#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "bikevol/core/errors.hpp"
#include "bikevol/core/parallel.hpp"
#include "bikevol/core/rng.hpp"
#include "bikevol/learners/config.hpp"
#include "bikevol/learners/estimator.hpp"
#include "bikevol/learners/tree.hpp"

namespace bikevol::learners {

using nlohmann::json;

std::string_view to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::BaselineMean: return "BaselineMean";
        case EstimatorKind::Linear: return "Linear";
        case EstimatorKind::DecisionTree: return "DecisionTree";
        case EstimatorKind::RandomForest: return "RandomForest";
        case EstimatorKind::GradientBoosting: return "GradientBoosting";
        case EstimatorKind::RegularizedBoosting: return "RegularizedBoosting";
    }
    return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view text) {
    for (auto k : kAllKinds) {
        if (to_string(k) == text) return k;
    }
    throw ConfigError("unknown estimator kind '" + std::string(text) + "'");
}

DataView view_of(const pipeline::FeatureTable& table) {
    DataView v;
    v.rows = table.rows();
    for (const auto& c : table.columns) v.columns.emplace_back(c.values);
    return v;
}

DataView Matrix::view() const {
    DataView v;
    v.rows = rows;
    for (const auto& c : columns) v.columns.emplace_back(c);
    return v;
}

Matrix take_rows(const DataView& x, std::span<const size_t> rows) {
    Matrix m;
    m.rows = rows.size();
    m.columns.resize(x.cols());
    for (size_t c = 0; c < x.cols(); ++c) {
        m.columns[c].reserve(rows.size());
        for (size_t r : rows) m.columns[c].push_back(x.columns[c][r]);
    }
    return m;
}

Matrix take_columns(const DataView& x, std::span<const size_t> cols) {
    Matrix m;
    m.rows = x.rows;
    for (size_t c : cols) m.columns.emplace_back(x.columns[c].begin(), x.columns[c].end());
    return m;
}

std::vector<double> take(std::span<const double> v, std::span<const size_t> rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (size_t r : rows) out.push_back(v[r]);
    return out;
}

void check_training_data(const DataView& x, std::span<const double> y, std::span<const double> weights) {
    if (x.rows == 0 || y.empty()) throw ComputeError("empty training set");
    if (y.size() != x.rows) throw ComputeError("target length does not match the feature rows");
    if (!weights.empty() && weights.size() != x.rows) throw ComputeError("weight length does not match the rows");
    for (const auto& c : x.columns) {
        if (c.size() != x.rows) throw ComputeError("ragged feature column");
        for (double v : c) {
            if (!std::isfinite(v)) throw ComputeError("non-finite feature value in training data");
        }
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw ComputeError("non-finite target value");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw ComputeError("sample weights must be finite and non-negative");
        total += w;
    }
    if (!weights.empty() && !(total > 0.0)) throw ComputeError("sample weights are all zero");
}

void Estimator::fit(const DataView& x, std::span<const double> y, std::span<const double> weights,
                    std::uint64_t seed) {
    check_training_data(x, y, weights);
    std::vector<double> unit;
    if (weights.empty()) {
        unit.assign(x.rows, 1.0);
        weights = unit;
    }
    n_features_ = x.cols();
    do_fit(x, y, weights, seed);
    fitted_ = true;
}

std::vector<double> Estimator::predict(const DataView& x) const {
    if (!fitted_) throw PreconditionError(std::string(to_string(kind())) + ": predict before fit");
    if (x.cols() != n_features_) {
        throw ComputeError("model expects " + std::to_string(n_features_) + " features, got " +
                           std::to_string(x.cols()));
    }
    for (const auto& c : x.columns) {
        for (double v : c) {
            if (!std::isfinite(v)) throw ComputeError("non-finite feature value at prediction");
        }
    }
    std::vector<double> out(x.rows, 0.0);
    do_predict(x, out);
    return out;
}

json Estimator::to_json() const {
    if (!fitted_) throw PreconditionError("cannot serialize an unfitted model");
    return {{"format_version", kModelFormatVersion},
            {"kind", std::string(to_string(kind()))},
            {"hyperparameters", hyper_},
            {"n_features", n_features_},
            {"state", state_to_json()}};
}

namespace {

// Relative pivot below which a direction of the standardized design counts as degenerate.
constexpr double kRankTolerance = 1e-10;

// ---- hyperparameter access ----

int get_int(const json& h, const char* name, int lo) {
    const auto& v = h.at(name);
    if (!v.is_number_integer() && !(v.is_number() && v.get<double>() == std::floor(v.get<double>()))) {
        throw ConfigError(std::string(name) + " must be an integer");
    }
    const int x = static_cast<int>(v.get<double>());
    if (x < lo) throw ConfigError(std::string(name) + " must be >= " + std::to_string(lo));
    return x;
}

int get_depth(const json& h) {
    const auto& v = h.at("max_depth");
    if (v.is_null()) return -1;
    return get_int(h, "max_depth", 1);
}

double get_real(const json& h, const char* name, double lo, double hi, bool lo_open = false) {
    const auto& v = h.at(name);
    if (!v.is_number()) throw ConfigError(std::string(name) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (lo_open && x == lo)) {
        throw ConfigError(std::string(name) + " is out of range");
    }
    return x;
}

bool get_bool(const json& h, const char* name) {
    const auto& v = h.at(name);
    if (!v.is_boolean()) throw ConfigError(std::string(name) + " must be true or false");
    return v.get<bool>();
}

double weighted_mean(std::span<const double> y, std::span<const double> w) {
    double swy = 0.0, sw = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        swy += w[i] * y[i];
        sw += w[i];
    }
    return swy / sw;
}

std::vector<int> all_features(size_t n) {
    std::vector<int> f(n);
    std::iota(f.begin(), f.end(), 0);
    return f;
}

std::vector<double> gains_of(const std::vector<Tree>& trees, size_t n_features) {
    std::vector<double> out(n_features, 0.0);
    for (const auto& t : trees) {
        for (const auto& n : t.nodes) {
            if (n.feature >= 0) out[static_cast<size_t>(n.feature)] += n.gain;
        }
    }
    return out;
}

json trees_to_json(const std::vector<Tree>& trees) {
    json out = json::array();
    for (const auto& t : trees) out.push_back(t.to_json());
    return out;
}

std::vector<Tree> trees_from_json(const json& j, size_t n_features) {
    std::vector<Tree> out;
    for (const auto& t : j) {
        out.push_back(Tree::from_json(t));
        for (const auto& n : out.back().nodes) {
            if (n.feature >= static_cast<int>(n_features)) throw DataError("tree uses a feature out of range");
        }
    }
    return out;
}

// ---- estimators ----

class BaselineMean final : public Estimator {
public:
    explicit BaselineMean(json h) : Estimator(std::move(h)) {}
    EstimatorKind kind() const override { return EstimatorKind::BaselineMean; }

protected:
    void do_fit(const DataView&, std::span<const double> y, std::span<const double> w, std::uint64_t) override {
        mean_ = weighted_mean(y, w);
    }
    void do_predict(const DataView&, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), mean_);
    }
    json state_to_json() const override { return {{"mean", mean_}}; }
    void state_from_json(const json& s) override { mean_ = s.at("mean").get<double>(); }

private:
    double mean_ = 0.0;
};

class Linear final : public Estimator {
public:
    explicit Linear(json h) : Estimator(std::move(h)) {}
    EstimatorKind kind() const override { return EstimatorKind::Linear; }

protected:
    void do_fit(const DataView& x, std::span<const double> y, std::span<const double> w, std::uint64_t) override {
        const size_t n = x.rows, p = x.cols();
        double sw = 0.0;
        for (double v : w) sw += v;
        const double ybar = weighted_mean(y, w);
        std::vector<double> mean(p, 0.0), sd(p, 0.0);
        std::vector<size_t> used;
        for (size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (size_t i = 0; i < n; ++i) s += w[i] * x.columns[j][i];
            mean[j] = s / sw;
            double ss = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double d = x.columns[j][i] - mean[j];
                ss += w[i] * d * d;
            }
            sd[j] = std::sqrt(ss / sw);
            if (sd[j] > 1e-12 * std::max(1.0, std::abs(mean[j]))) used.push_back(j);
        }
        coef_.assign(p, 0.0);
        if (!used.empty()) {
            Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(used.size()));
            Eigen::VectorXd t(static_cast<Eigen::Index>(n));
            for (size_t i = 0; i < n; ++i) {
                const double sq = std::sqrt(w[i]);
                t(static_cast<Eigen::Index>(i)) = sq * (y[i] - ybar);
                for (size_t k = 0; k < used.size(); ++k) {
                    const size_t j = used[k];
                    z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                        sq * (x.columns[j][i] - mean[j]) / sd[j];
                }
            }
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(z.cols(), z.cols());
            cod.setThreshold(kRankTolerance);
            cod.compute(z);
            const Eigen::VectorXd beta = cod.solve(t);
            for (size_t k = 0; k < used.size(); ++k) coef_[used[k]] = beta(static_cast<Eigen::Index>(k)) / sd[used[k]];
        }
        intercept_ = ybar;
        for (size_t j = 0; j < p; ++j) intercept_ -= coef_[j] * mean[j];
    }
    void do_predict(const DataView& x, std::span<double> out) const override {
        for (size_t i = 0; i < x.rows; ++i) {
            double v = intercept_;
            for (size_t j = 0; j < coef_.size(); ++j) v += coef_[j] * x.columns[j][i];
            out[i] = v;
        }
    }
    json state_to_json() const override { return {{"intercept", intercept_}, {"coefficients", coef_}}; }
    void state_from_json(const json& s) override {
        intercept_ = s.at("intercept").get<double>();
        coef_ = s.at("coefficients").get<std::vector<double>>();
        if (coef_.size() != n_features_) throw DataError("linear model coefficient count mismatch");
    }

private:
    double intercept_ = 0.0;
    std::vector<double> coef_;
};

TreeParams cart_params(const json& h) {
    TreeParams p;
    p.max_depth = get_depth(h);
    p.min_split_h = get_real(h, "min_samples_split", 0.0, 1e300);
    p.min_child_h = get_real(h, "min_samples_leaf", 0.0, 1e300);
    return p;
}

class DecisionTree final : public Estimator {
public:
    explicit DecisionTree(json h) : Estimator(std::move(h)) { params_ = cart_params(hyper_); }
    EstimatorKind kind() const override { return EstimatorKind::DecisionTree; }
    std::vector<double> feature_gains() const override { return gains_of({tree_}, n_features_); }

protected:
    void do_fit(const DataView& x, std::span<const double> y, std::span<const double> w, std::uint64_t) override {
        std::vector<double> g(x.rows);
        for (size_t i = 0; i < x.rows; ++i) g[i] = -w[i] * y[i];
        tree_ = build_tree(x, presort(x), g, w, all_features(x.cols()), params_);
    }
    void do_predict(const DataView& x, std::span<double> out) const override {
        for (size_t i = 0; i < x.rows; ++i) out[i] = tree_.predict_row(x, i);
    }
    json state_to_json() const override { return {{"tree", tree_.to_json()}}; }
    void state_from_json(const json& s) override { tree_ = trees_from_json(json::array({s.at("tree")}), n_features_)[0]; }

private:
    TreeParams params_;
    Tree tree_;
};

class RandomForest final : public Estimator {
public:
    explicit RandomForest(json h) : Estimator(std::move(h)) {
        params_ = cart_params(hyper_);
        params_.max_features = get_real(hyper_, "max_features", 0.0, 1.0, true);
        n_trees_ = get_int(hyper_, "n_estimators", 1);
        bootstrap_ = get_bool(hyper_, "bootstrap");
    }
    EstimatorKind kind() const override { return EstimatorKind::RandomForest; }
    std::vector<double> feature_gains() const override { return gains_of(trees_, n_features_); }

protected:
    void do_fit(const DataView& x, std::span<const double> y, std::span<const double> w, std::uint64_t seed) override {
        const size_t n = x.rows;
        const auto sorted = presort(x);
        const auto features = all_features(x.cols());
        std::vector<double> cum(n);
        std::partial_sum(w.begin(), w.end(), cum.begin());
        trees_.assign(static_cast<size_t>(n_trees_), {});
        parallel_for(trees_.size(), 0, [&](size_t t) {
            Rng rng(derive_seed(seed, {t}));
            std::vector<double> h(n, 0.0);
            if (bootstrap_) {
                // Weight-proportional resampling; the draw counts become the row weights.
                const double total = cum.back();
                for (size_t k = 0; k < n; ++k) {
                    const double u = rng.uniform() * total;
                    auto idx = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
                    idx = std::min(idx, n - 1);
                    h[idx] += 1.0;
                }
            } else {
                std::copy(w.begin(), w.end(), h.begin());
            }
            std::vector<double> g(n);
            for (size_t i = 0; i < n; ++i) g[i] = -h[i] * y[i];
            trees_[t] = build_tree(x, sorted, g, h, features, params_, &rng);
        });
    }
    void do_predict(const DataView& x, std::span<double> out) const override {
        for (size_t i = 0; i < x.rows; ++i) {
            double s = 0.0;
            for (const auto& t : trees_) s += t.predict_row(x, i);
            out[i] = s / static_cast<double>(trees_.size());
        }
    }
    json state_to_json() const override { return {{"trees", trees_to_json(trees_)}}; }
    void state_from_json(const json& s) override { trees_ = trees_from_json(s.at("trees"), n_features_); }

private:
    TreeParams params_;
    int n_trees_ = 100;
    bool bootstrap_ = true;
    std::vector<Tree> trees_;
};

class GradientBoosting final : public Estimator {
public:
    explicit GradientBoosting(json h) : Estimator(std::move(h)) {
        params_ = cart_params(hyper_);
        n_trees_ = get_int(hyper_, "n_estimators", 1);
        lr_ = get_real(hyper_, "learning_rate", 0.0, 1.0, true);
    }
    EstimatorKind kind() const override { return EstimatorKind::GradientBoosting; }
    std::vector<double> feature_gains() const override { return gains_of(trees_, n_features_); }

protected:
    void do_fit(const DataView& x, std::span<const double> y, std::span<const double> w, std::uint64_t) override {
        const size_t n = x.rows;
        const auto sorted = presort(x);
        const auto features = all_features(x.cols());
        init_ = weighted_mean(y, w);
        std::vector<double> f(n, init_), g(n);
        trees_.clear();
        for (int t = 0; t < n_trees_; ++t) {
            for (size_t i = 0; i < n; ++i) g[i] = -w[i] * (y[i] - f[i]);
            Tree tree = build_tree(x, sorted, g, w, features, params_);
            tree.scale_values(lr_);
            for (size_t i = 0; i < n; ++i) f[i] += tree.predict_row(x, i);
            trees_.push_back(std::move(tree));
        }
    }
    void do_predict(const DataView& x, std::span<double> out) const override {
        for (size_t i = 0; i < x.rows; ++i) {
            double s = init_;
            for (const auto& t : trees_) s += t.predict_row(x, i);
            out[i] = s;
        }
    }
    json state_to_json() const override { return {{"init", init_}, {"trees", trees_to_json(trees_)}}; }
    void state_from_json(const json& s) override {
        init_ = s.at("init").get<double>();
        trees_ = trees_from_json(s.at("trees"), n_features_);
    }

private:
    TreeParams params_;
    int n_trees_ = 100;
    double lr_ = 0.1;
    double init_ = 0.0;
    std::vector<Tree> trees_;
};

class RegularizedBoosting final : public Estimator {
public:
    explicit RegularizedBoosting(json h) : Estimator(std::move(h)) {
        params_.max_depth = get_depth(hyper_);
        params_.min_child_h = get_real(hyper_, "min_child_weight", 0.0, 1e300);
        params_.lambda = get_real(hyper_, "reg_lambda", 0.0, 1e300);
        n_trees_ = get_int(hyper_, "n_estimators", 1);
        lr_ = get_real(hyper_, "learning_rate", 0.0, 1.0, true);
        subsample_ = get_real(hyper_, "subsample", 0.0, 1.0, true);
        colsample_ = get_real(hyper_, "colsample_bytree", 0.0, 1.0, true);
        const auto& gv = hyper_.at("gamma");
        if (gv.is_string() && gv.get<std::string>() == "inf") {
            gamma_ = std::numeric_limits<double>::infinity();
        } else {
            gamma_ = get_real(hyper_, "gamma", 0.0, std::numeric_limits<double>::infinity());
        }
    }
    EstimatorKind kind() const override { return EstimatorKind::RegularizedBoosting; }
    std::vector<double> feature_gains() const override { return gains_of(trees_, n_features_); }
    double base_score() const { return base_; }

protected:
    void do_fit(const DataView& x, std::span<const double> y, std::span<const double> w, std::uint64_t seed) override {
        const size_t n = x.rows, p = x.cols();
        const auto sorted = presort(x);
        base_ = weighted_mean(y, w);
        std::vector<double> f(n, base_), g(n), h(n);
        trees_.clear();
        for (int t = 0; t < n_trees_; ++t) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
            std::vector<int> features = all_features(p);
            if (colsample_ < 1.0 && p > 0) {
                const auto m = std::max<size_t>(1, static_cast<size_t>(std::llround(colsample_ * static_cast<double>(p))));
                rng.shuffle(std::span<int>(features));
                features.resize(m);
                std::sort(features.begin(), features.end());
            }
            for (size_t i = 0; i < n; ++i) {
                const bool in = subsample_ >= 1.0 || rng.uniform() < subsample_;
                g[i] = in ? w[i] * (f[i] - y[i]) : 0.0;
                h[i] = in ? w[i] : 0.0;
            }
            Tree tree = build_tree(x, sorted, g, h, features, params_);
            prune_gamma(tree, gamma_);
            tree.scale_values(lr_);
            for (size_t i = 0; i < n; ++i) f[i] += tree.predict_row(x, i);
            trees_.push_back(std::move(tree));
        }
    }
    void do_predict(const DataView& x, std::span<double> out) const override {
        for (size_t i = 0; i < x.rows; ++i) {
            double s = base_;
            for (const auto& t : trees_) s += t.predict_row(x, i);
            out[i] = s;
        }
    }
    json state_to_json() const override { return {{"base_score", base_}, {"trees", trees_to_json(trees_)}}; }
    void state_from_json(const json& s) override {
        base_ = s.at("base_score").get<double>();
        trees_ = trees_from_json(s.at("trees"), n_features_);
    }

private:
    TreeParams params_;
    int n_trees_ = 100;
    double lr_ = 0.1, subsample_ = 1.0, colsample_ = 1.0, gamma_ = 0.0;
    double base_ = 0.0;
    std::vector<Tree> trees_;
};

json merged_hyperparameters(EstimatorKind kind, const json& overrides) {
    json h = default_hyperparameters(kind);
    if (overrides.is_null()) return h;
    if (!overrides.is_object()) throw ConfigError("hyperparameters must be an object");
    for (const auto& [key, value] : overrides.items()) {
        if (!h.contains(key)) {
            throw ConfigError("unknown hyperparameter '" + key + "' for " + std::string(to_string(kind)));
        }
        h[key] = value;
    }
    return h;
}

}  // namespace

std::unique_ptr<Estimator> make_estimator(EstimatorKind kind, const json& hyperparameters) {
    json h = merged_hyperparameters(kind, hyperparameters);
    try {
        switch (kind) {
            case EstimatorKind::BaselineMean: return std::make_unique<BaselineMean>(std::move(h));
            case EstimatorKind::Linear: return std::make_unique<Linear>(std::move(h));
            case EstimatorKind::DecisionTree: return std::make_unique<DecisionTree>(std::move(h));
            case EstimatorKind::RandomForest: return std::make_unique<RandomForest>(std::move(h));
            case EstimatorKind::GradientBoosting: return std::make_unique<GradientBoosting>(std::move(h));
            case EstimatorKind::RegularizedBoosting: return std::make_unique<RegularizedBoosting>(std::move(h));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("hyperparameters: ") + e.what());
    }
    throw ConfigError("unknown estimator kind");
}

std::unique_ptr<Estimator> load_estimator(const json& j) {
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw DataError("unsupported model format_version");
        }
        const auto kind = parse_estimator_kind(j.at("kind").get<std::string>());
        auto est = make_estimator(kind, j.at("hyperparameters"));
        est->n_features_ = j.at("n_features").get<size_t>();
        est->state_from_json(j.at("state"));
        est->fitted_ = true;
        return est;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("malformed model: ") + e.what());
    }
}

}  // namespace bikevol::learners
