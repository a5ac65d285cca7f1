#include "bikevol/learners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bikevol/core/errors.hpp"

namespace bikevol::learners {

using nlohmann::json;

double Tree::predict_row(const DataView& x, size_t row) const {
    int n = 0;
    while (nodes[static_cast<size_t>(n)].feature >= 0) {
        const auto& node = nodes[static_cast<size_t>(n)];
        n = x.columns[static_cast<size_t>(node.feature)][row] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<size_t>(n)].value;
}

size_t Tree::leaf_count() const {
    size_t n = 0;
    for (const auto& node : nodes) n += node.feature < 0 ? 1 : 0;
    return n;
}

size_t Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<size_t> d(nodes.size(), 0);
    size_t best = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes[i].feature >= 0) {
            d[static_cast<size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

void Tree::scale_values(double factor) {
    for (auto& node : nodes) node.value *= factor;
}

json Tree::to_json() const {
    json out = json::array();
    for (const auto& n : nodes) {
        if (n.feature < 0) {
            out.push_back({{"value", n.value}});
        } else {
            out.push_back({{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right},
                           {"value", n.value},
                           {"gain", n.gain}});
        }
    }
    return out;
}

Tree Tree::from_json(const json& j) {
    Tree t;
    for (const auto& n : j) {
        TreeNode node;
        node.value = n.at("value").get<double>();
        if (n.contains("feature")) {
            node.feature = n.at("feature").get<int>();
            node.threshold = n.at("threshold").get<double>();
            node.left = n.at("left").get<int>();
            node.right = n.at("right").get<int>();
            node.gain = n.at("gain").get<double>();
        }
        t.nodes.push_back(node);
    }
    const auto n = static_cast<int>(t.nodes.size());
    for (const auto& node : t.nodes) {
        if (node.feature >= 0 && (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n)) {
            throw DataError("tree node references a child out of range");
        }
    }
    if (t.nodes.empty()) throw DataError("tree has no nodes");
    return t;
}

SortedColumns presort(const DataView& x) {
    SortedColumns out(x.cols());
    for (size_t f = 0; f < x.cols(); ++f) {
        auto& order = out[f];
        order.resize(x.rows);
        std::iota(order.begin(), order.end(), 0u);
        const auto col = x.columns[f];
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
    return out;
}

namespace {

struct Frontier {
    int node = 0;
    double G = 0, H = 0, E = 0;  // E = sum g^2/h bounds every score in the node
    double parent_score = 0;
    bool splittable = false;
    std::vector<char> uses;      // per feature, when features are sampled per node
    // best split
    int feature = -1;
    double threshold = 0, gain = 0, GL = 0, HL = 0;
    // scan state
    double gl = 0, hl = 0, last = 0;
    bool has_last = false;
};

double score(double G, double H, double lambda) { return G * G / (H + lambda); }

}  // namespace

Tree build_tree(const DataView& x, const SortedColumns& sorted, std::span<const double> g,
                std::span<const double> h, const std::vector<int>& allowed, const TreeParams& params,
                Rng* rng) {
    const size_t N = x.rows;
    const bool sample_features = params.max_features < 1.0;
    if (sample_features && rng == nullptr) throw ComputeError("feature sampling needs a random stream");

    Tree tree;
    std::vector<int> slot_of_row(N, -1);
    Frontier root;
    for (size_t i = 0; i < N; ++i) {
        if (!(h[i] > 0.0)) continue;
        slot_of_row[i] = 0;
        root.G += g[i];
        root.H += h[i];
        root.E += g[i] * g[i] / h[i];
    }
    tree.nodes.push_back({-1, 0.0, -1, -1, root.H > 0 ? -root.G / (root.H + params.lambda) : 0.0, 0.0});
    std::vector<Frontier> frontier;
    frontier.push_back(std::move(root));

    // Column values in sorted order, so the scans below read memory sequentially.
    std::vector<std::vector<double>> sorted_values(x.cols());
    for (int f : allowed) {
        const auto fu = static_cast<size_t>(f);
        auto& sv = sorted_values[fu];
        sv.reserve(N);
        for (std::uint32_t row : sorted[fu]) sv.push_back(x.columns[fu][row]);
    }

    for (int depth = 0; !frontier.empty(); ++depth) {
        const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
        bool any = false;
        for (auto& fr : frontier) {
            fr.splittable = depth_ok && fr.H > 0 && fr.H >= params.min_split_h && fr.H >= 2.0 * params.min_child_h;
            fr.parent_score = score(fr.G, fr.H, params.lambda);
            any = any || fr.splittable;
            if (fr.splittable && sample_features) {
                fr.uses.assign(x.cols(), 0);
                std::vector<int> pool = allowed;
                const auto m = std::max<size_t>(
                    1, static_cast<size_t>(std::llround(params.max_features * static_cast<double>(pool.size()))));
                // Partial Fisher-Yates: the first m entries form the sample.
                for (size_t i = 0; i < m && i < pool.size(); ++i) {
                    const auto j = i + static_cast<size_t>(rng->below(pool.size() - i));
                    std::swap(pool[i], pool[j]);
                    fr.uses[static_cast<size_t>(pool[i])] = 1;
                }
            }
        }
        if (!any) break;
        // Rows of nodes that cannot split stay where they are from now on.
        for (auto& slot : slot_of_row) {
            if (slot >= 0 && !frontier[static_cast<size_t>(slot)].splittable) slot = -1;
        }

        for (int f : allowed) {
            const auto fu = static_cast<size_t>(f);
            for (auto& fr : frontier) {
                fr.gl = fr.hl = 0;
                fr.has_last = false;
            }
            const auto& order = sorted[fu];
            const auto& values = sorted_values[fu];
            for (size_t k = 0; k < N; ++k) {
                const std::uint32_t row = order[k];
                const int slot = slot_of_row[row];
                if (slot < 0) continue;
                auto& fr = frontier[static_cast<size_t>(slot)];
                if (sample_features && !fr.uses[fu]) continue;
                const double v = values[k];
                if (fr.has_last && v != fr.last) {
                    const double HR = fr.H - fr.hl;
                    if (fr.hl > 0 && HR > 0 && fr.hl >= params.min_child_h && HR >= params.min_child_h) {
                        const double gain = 0.5 * (score(fr.gl, fr.hl, params.lambda) +
                                                   score(fr.G - fr.gl, HR, params.lambda) - fr.parent_score);
                        const double floor = 1e-12 * fr.E;
                        const double tol = fr.feature < 0 ? floor : std::max(floor, 1e-10 * std::abs(fr.gain));
                        if (gain > floor && (fr.feature < 0 || gain > fr.gain + tol)) {
                            double thr = std::midpoint(fr.last, v);
                            if (!(thr < v)) thr = fr.last;
                            fr.feature = f;
                            fr.threshold = thr;
                            fr.gain = gain;
                            fr.GL = fr.gl;
                            fr.HL = fr.hl;
                        }
                    }
                }
                fr.gl += g[row];
                fr.hl += h[row];
                fr.last = v;
                fr.has_last = true;
            }
        }

        // Split the winners; children form the next frontier.
        std::vector<Frontier> next;
        std::vector<int> left_slot(frontier.size(), -1);
        for (size_t s = 0; s < frontier.size(); ++s) {
            auto& fr = frontier[s];
            if (fr.feature < 0) continue;
            auto& node = tree.nodes[static_cast<size_t>(fr.node)];
            node.feature = fr.feature;
            node.threshold = fr.threshold;
            node.gain = fr.gain;
            node.left = static_cast<int>(tree.nodes.size());
            node.right = node.left + 1;
            const double GR = fr.G - fr.GL, HR = fr.H - fr.HL;
            tree.nodes.push_back({-1, 0.0, -1, -1, -fr.GL / (fr.HL + params.lambda), 0.0});
            tree.nodes.push_back({-1, 0.0, -1, -1, -GR / (HR + params.lambda), 0.0});
            left_slot[s] = static_cast<int>(next.size());
            Frontier l, r;
            l.node = node.left;
            r.node = node.right;
            next.push_back(std::move(l));
            next.push_back(std::move(r));
        }
        for (size_t i = 0; i < N; ++i) {
            const int slot = slot_of_row[i];
            if (slot < 0) continue;
            const int ls = left_slot[static_cast<size_t>(slot)];
            if (ls < 0) {
                slot_of_row[i] = -1;
                continue;
            }
            const auto& fr = frontier[static_cast<size_t>(slot)];
            const int child = x.columns[static_cast<size_t>(fr.feature)][i] <= fr.threshold ? ls : ls + 1;
            slot_of_row[i] = child;
            auto& c = next[static_cast<size_t>(child)];
            c.G += g[i];
            c.H += h[i];
            c.E += g[i] * g[i] / h[i];
        }
        // Recompute child values from direct sums, so they do not carry subtraction error.
        for (const auto& c : next) tree.nodes[static_cast<size_t>(c.node)].value = -c.G / (c.H + params.lambda);
        frontier = std::move(next);
    }
    return tree;
}

void prune_gamma(Tree& tree, double gamma) {
    if (tree.nodes.empty()) return;
    // Children always follow their parent, so a reverse sweep is a post-order pass.
    for (size_t i = tree.nodes.size(); i-- > 0;) {
        auto& n = tree.nodes[i];
        if (n.feature < 0) continue;
        const auto& l = tree.nodes[static_cast<size_t>(n.left)];
        const auto& r = tree.nodes[static_cast<size_t>(n.right)];
        if (l.feature < 0 && r.feature < 0 && n.gain - gamma <= 0.0) {
            n.feature = -1;
            n.left = n.right = -1;
            n.gain = 0.0;
        }
    }
    // Compact away unreachable nodes, keeping breadth-first order.
    Tree out;
    out.nodes.push_back(tree.nodes[0]);
    for (size_t q = 0; q < out.nodes.size(); ++q) {
        auto& n = out.nodes[q];
        if (n.feature < 0) continue;
        const auto l = tree.nodes[static_cast<size_t>(n.left)];
        const auto r = tree.nodes[static_cast<size_t>(n.right)];
        n.left = static_cast<int>(out.nodes.size());
        n.right = n.left + 1;
        out.nodes.push_back(l);
        out.nodes.push_back(r);
    }
    tree = std::move(out);
}

}  // namespace bikevol::learners
