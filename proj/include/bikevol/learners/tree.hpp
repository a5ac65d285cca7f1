#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bikevol/core/rng.hpp"
#include "bikevol/learners/estimator.hpp"
#include "json.hpp"

namespace bikevol::learners {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;
    double gain = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict_row(const DataView& x, size_t row) const;
    size_t leaf_count() const;
    size_t depth() const;
    void scale_values(double factor);

    nlohmann::json to_json() const;
    static Tree from_json(const nlohmann::json& j);
};

// Row indices of each column sorted by value (ties by row index).
using SortedColumns = std::vector<std::vector<std::uint32_t>>;
SortedColumns presort(const DataView& x);

struct TreeParams {
    int max_depth = -1;         // -1: unlimited
    double min_split_h = 0.0;   // a node needs this much hessian mass to be split
    double min_child_h = 0.0;   // each child needs this much
    double lambda = 0.0;        // L2 penalty on leaf values
    double max_features = 1.0;  // fraction of allowed features drawn per node
};

/// Grows one tree level by level from gradient/hessian pairs. Leaf value = -G/(H+lambda);
/// split gain = 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)].
/// Rows with h == 0 take no part. Candidate thresholds are midpoints between consecutive
/// distinct values; equal gains resolve to the lower feature index, then the lower threshold.
/// `allowed` lists the usable feature indices (ascending). `rng` is needed when
/// max_features < 1.
Tree build_tree(const DataView& x, const SortedColumns& sorted, std::span<const double> g,
                std::span<const double> h, const std::vector<int>& allowed, const TreeParams& params,
                Rng* rng = nullptr);

// Collapses, bottom-up, every split whose children are leaves and whose gain - gamma <= 0.
void prune_gamma(Tree& tree, double gamma);

}  // namespace bikevol::learners
