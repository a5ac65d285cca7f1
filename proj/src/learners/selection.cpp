#include "bikevol/learners/selection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "bikevol/core/errors.hpp"
#include "bikevol/learners/config.hpp"
#include "bikevol/learners/search.hpp"

namespace bikevol::learners {

std::string_view to_string(SelectionMethod method) {
    switch (method) {
        case SelectionMethod::None: return "none";
        case SelectionMethod::UnivariateKBest: return "kbest";
        case SelectionMethod::RFELinear: return "rfe_linear";
        case SelectionMethod::FromModelBoosting: return "from_model_boosting";
        case SelectionMethod::SequentialForward: return "sequential_forward";
    }
    return "unknown";
}

SelectionMethod parse_selection_method(std::string_view text) {
    for (auto m : {SelectionMethod::None, SelectionMethod::UnivariateKBest, SelectionMethod::RFELinear,
                   SelectionMethod::FromModelBoosting, SelectionMethod::SequentialForward}) {
        if (to_string(m) == text) return m;
    }
    throw ConfigError("unknown feature-selection method '" + std::string(text) + "'");
}

SelectionMethod default_selection_method(EstimatorKind kind) {
    return parse_selection_method(learner_config()
                                      .at("feature_selection")
                                      .at("default_method")
                                      .at(std::string(to_string(kind)))
                                      .get<std::string>());
}

namespace {

using Eigen::Index;

// Weighted first and second moments over a row subset.
struct Moments {
    double sw = 0.0;
    double ymean = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // weighted covariance of the columns
    Eigen::VectorXd cov_y;
};

Moments moments(const DataView& x, std::span<const double> y, std::span<const double> w,
                std::span<const size_t> rows) {
    const auto p = static_cast<Index>(x.cols());
    const auto n = static_cast<Index>(rows.size());
    Moments m;
    double swy = 0.0;
    m.mean = Eigen::VectorXd::Zero(p);
    for (size_t r : rows) {
        m.sw += w[r];
        swy += w[r] * y[r];
    }
    m.ymean = swy / m.sw;
    for (Index j = 0; j < p; ++j) {
        double s = 0.0;
        for (size_t r : rows) s += w[r] * x.columns[static_cast<size_t>(j)][r];
        m.mean(j) = s / m.sw;
    }
    Eigen::MatrixXd xc(n, p);
    Eigen::VectorXd yc(n);
    for (Index i = 0; i < n; ++i) {
        const size_t r = rows[static_cast<size_t>(i)];
        const double sq = std::sqrt(w[r]);
        yc(i) = sq * (y[r] - m.ymean);
        for (Index j = 0; j < p; ++j) xc(i, j) = sq * (x.columns[static_cast<size_t>(j)][r] - m.mean(j));
    }
    m.cov = (xc.transpose() * xc) / m.sw;
    m.cov_y = (xc.transpose() * yc) / m.sw;
    return m;
}

// Raw-unit coefficients of the linear fit restricted to `subset`.
Eigen::VectorXd solve_subset(const Moments& m, const std::vector<size_t>& subset) {
    const auto k = static_cast<Index>(subset.size());
    if (k == 0) return {};
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd b(k);
    for (Index i = 0; i < k; ++i) {
        b(i) = m.cov_y(static_cast<Index>(subset[static_cast<size_t>(i)]));
        for (Index j = 0; j < k; ++j) {
            a(i, j) = m.cov(static_cast<Index>(subset[static_cast<size_t>(i)]),
                            static_cast<Index>(subset[static_cast<size_t>(j)]));
        }
    }
    return a.completeOrthogonalDecomposition().solve(b);
}

std::vector<size_t> all_rows(size_t n) {
    std::vector<size_t> r(n);
    std::iota(r.begin(), r.end(), size_t{0});
    return r;
}

std::vector<size_t> kbest(const DataView& x, std::span<const double> y, std::span<const double> w, size_t k) {
    const auto m = moments(x, y, w, all_rows(x.rows));
    double vy = 0.0;
    for (size_t r = 0; r < x.rows; ++r) vy += w[r] * (y[r] - m.ymean) * (y[r] - m.ymean);
    vy /= m.sw;
    std::vector<double> score(x.cols(), 0.0);
    for (size_t j = 0; j < x.cols(); ++j) {
        const double vx = m.cov(static_cast<Index>(j), static_cast<Index>(j));
        if (vx > 0.0) score[j] = std::abs(m.cov_y(static_cast<Index>(j)) / std::sqrt(vx * vy));
    }
    std::vector<size_t> order = all_rows(x.cols());
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return score[a] > score[b]; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<size_t> rfe_linear(const DataView& x, std::span<const double> y, std::span<const double> w, size_t k) {
    const auto m = moments(x, y, w, all_rows(x.rows));
    std::vector<size_t> active = all_rows(x.cols());
    while (active.size() > k) {
        const auto beta = solve_subset(m, active);
        size_t drop = 0;
        double smallest = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < active.size(); ++i) {
            const auto j = static_cast<Index>(active[i]);
            const double s = std::abs(beta(static_cast<Index>(i))) * std::sqrt(std::max(0.0, m.cov(j, j)));
            if (s <= smallest) {
                smallest = s;
                drop = i;
            }
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    return active;
}

std::vector<size_t> from_model(const DataView& x, std::span<const double> y, std::span<const double> w,
                               std::uint64_t seed) {
    auto est = make_estimator(EstimatorKind::RegularizedBoosting);
    est->fit(x, y, w, seed);
    const auto gains = est->feature_gains();
    std::vector<double> sorted = gains;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::vector<size_t> keep;
    for (size_t j = 0; j < n; ++j) {
        if (gains[j] >= median) keep.push_back(j);
    }
    return keep;
}

// Grouped-CV MAE of a linear model on each candidate subset, from per-fold moments.
class LinearCv {
public:
    LinearCv(const DataView& x, std::span<const double> y, std::span<const double> w,
             std::span<const std::string> groups, size_t k, std::uint64_t seed)
        : x_(x), y_(y) {
        folds_ = group_kfold(groups, k, seed);
        for (const auto& val : folds_) {
            std::vector<char> in_val(x.rows, 0);
            for (size_t r : val) in_val[r] = 1;
            std::vector<size_t> train;
            for (size_t r = 0; r < x.rows; ++r) {
                if (!in_val[r]) train.push_back(r);
            }
            fold_moments_.push_back(moments(x, y, w, train));
        }
    }

    double mae(const std::vector<size_t>& subset) const {
        double total = 0.0;
        for (size_t f = 0; f < folds_.size(); ++f) {
            const auto& m = fold_moments_[f];
            const auto beta = solve_subset(m, subset);
            double err = 0.0;
            for (size_t r : folds_[f]) {
                double pred = m.ymean;
                for (size_t i = 0; i < subset.size(); ++i) {
                    const auto j = subset[i];
                    pred += beta(static_cast<Index>(i)) * (x_.columns[j][r] - m.mean(static_cast<Index>(j)));
                }
                err += std::abs(y_[r] - pred);
            }
            total += err / static_cast<double>(folds_[f].size());
        }
        return total / static_cast<double>(folds_.size());
    }

private:
    const DataView& x_;
    std::span<const double> y_;
    std::vector<std::vector<size_t>> folds_;
    std::vector<Moments> fold_moments_;
};

std::vector<size_t> sequential_forward(const DataView& x, std::span<const double> y, std::span<const double> w,
                                       std::span<const std::string> groups, const SelectionOptions& o) {
    std::optional<LinearCv> linear;
    if (o.sequential_evaluator == EstimatorKind::Linear) linear.emplace(x, y, w, groups, o.cv_folds, o.seed);
    const auto evaluate = [&](const std::vector<size_t>& subset) {
        if (linear) return linear->mae(subset);
        const auto sub = take_columns(x, subset);
        return grouped_cv_mae(o.sequential_evaluator, {}, sub.view(), y, w, groups, o.cv_folds, o.seed);
    };

    std::vector<size_t> selected;
    std::vector<char> used(x.cols(), 0);
    double current = evaluate(selected);
    while (selected.size() < o.k) {
        double best = std::numeric_limits<double>::infinity();
        size_t best_j = x.cols();
        for (size_t j = 0; j < x.cols(); ++j) {
            if (used[j]) continue;
            auto trial = selected;
            trial.push_back(j);
            const double e = evaluate(trial);
            if (e < best) {
                best = e;
                best_j = j;
            }
        }
        if (best_j == x.cols() || !(best < current - 1e-12 * std::abs(current))) break;
        selected.push_back(best_j);
        used[best_j] = 1;
        current = best;
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

}  // namespace

std::vector<size_t> select_features(const DataView& x, std::span<const double> y, std::span<const double> weights,
                                    std::span<const std::string> groups, const SelectionOptions& options) {
    if (options.method == SelectionMethod::None) return all_rows(x.cols());
    if (options.method != SelectionMethod::FromModelBoosting && (options.k == 0 || options.k > x.cols())) {
        throw PreconditionError("feature selection needs 1 <= k <= " + std::to_string(x.cols()));
    }
    check_training_data(x, y, weights);
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
        throw ComputeError("feature selection is undefined for a constant target");
    }
    std::vector<double> unit;
    if (weights.empty()) {
        unit.assign(x.rows, 1.0);
        weights = unit;
    }
    switch (options.method) {
        case SelectionMethod::UnivariateKBest: return kbest(x, y, weights, options.k);
        case SelectionMethod::RFELinear: return rfe_linear(x, y, weights, options.k);
        case SelectionMethod::FromModelBoosting: return from_model(x, y, weights, options.seed);
        case SelectionMethod::SequentialForward:
            if (groups.size() != x.rows) throw PreconditionError("sequential selection needs a group per row");
            return sequential_forward(x, y, weights, groups, options);
        case SelectionMethod::None: break;
    }
    return all_rows(x.cols());
}

}  // namespace bikevol::learners
