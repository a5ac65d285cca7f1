#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bikevol/pipeline/feature_table.hpp"
#include "json.hpp"

namespace bikevol::learners {

enum class EstimatorKind {
    BaselineMean,
    Linear,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    RegularizedBoosting,
};

inline constexpr std::array<EstimatorKind, 6> kAllKinds = {
    EstimatorKind::BaselineMean,     EstimatorKind::Linear,
    EstimatorKind::DecisionTree,     EstimatorKind::RandomForest,
    EstimatorKind::GradientBoosting, EstimatorKind::RegularizedBoosting};

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view text);

/// Column-major read-only view of a design matrix.
struct DataView {
    size_t rows = 0;
    std::vector<std::span<const double>> columns;

    size_t cols() const { return columns.size(); }
    double at(size_t row, size_t col) const { return columns[col][row]; }
};

DataView view_of(const pipeline::FeatureTable& table);

// Owning column-major matrix, for row or column subsets of a view.
struct Matrix {
    size_t rows = 0;
    std::vector<std::vector<double>> columns;

    DataView view() const;
};

Matrix take_rows(const DataView& x, std::span<const size_t> rows);
Matrix take_columns(const DataView& x, std::span<const size_t> cols);
std::vector<double> take(std::span<const double> v, std::span<const size_t> rows);

/// Throws ComputeError on an empty training set, misaligned lengths, non-finite values,
/// negative weights or all-zero weights. An empty `weights` span means unit weights.
void check_training_data(const DataView& x, std::span<const double> y, std::span<const double> weights);

class Estimator {
public:
    virtual ~Estimator() = default;

    virtual EstimatorKind kind() const = 0;
    const nlohmann::json& hyperparameters() const { return hyper_; }
    bool fitted() const { return fitted_; }
    size_t n_features() const { return n_features_; }

    void fit(const DataView& x, std::span<const double> y, std::span<const double> weights,
             std::uint64_t seed);
    // Throws PreconditionError before fit, ComputeError on a column-count mismatch.
    std::vector<double> predict(const DataView& x) const;

    // Total split gain per feature (tree models); zeros for models without splits.
    virtual std::vector<double> feature_gains() const { return std::vector<double>(n_features_, 0.0); }

    nlohmann::json to_json() const;

protected:
    explicit Estimator(nlohmann::json hyper) : hyper_(std::move(hyper)) {}

    virtual void do_fit(const DataView& x, std::span<const double> y, std::span<const double> w,
                        std::uint64_t seed) = 0;
    virtual void do_predict(const DataView& x, std::span<double> out) const = 0;
    virtual nlohmann::json state_to_json() const = 0;
    virtual void state_from_json(const nlohmann::json& state) = 0;

    friend std::unique_ptr<Estimator> load_estimator(const nlohmann::json& j);

    nlohmann::json hyper_;
    bool fitted_ = false;
    size_t n_features_ = 0;
};

inline constexpr int kModelFormatVersion = 1;

/// Builds an estimator with the configured defaults overlaid by `hyperparameters`.
/// Unknown names or out-of-range values raise ConfigError.
std::unique_ptr<Estimator> make_estimator(EstimatorKind kind, const nlohmann::json& hyperparameters = {});

// Inverse of Estimator::to_json; predictions round-trip bit-exactly.
std::unique_ptr<Estimator> load_estimator(const nlohmann::json& j);

}  // namespace bikevol::learners
