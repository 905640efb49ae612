#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "merit/error.hpp"
#include "merit/learners.hpp"

namespace merit {
namespace {

struct Split {
    double gain = 0.0;
    int feature = -1;
    std::size_t left_count = 0;
    double threshold = 0.0;
};

struct Leaf {
    std::size_t begin = 0;
    std::size_t end = 0;
    double sum = 0.0;          // weighted residual sum
    std::uint32_t weight = 0;  // number of original rows
    int node = 0;
    int buffer = 0;            // which of the two column buffers holds the range
    Split best;
};

// Training rows after merging exact duplicates (equal features and target);
// `weight` counts the merged copies. Duplicates always share a leaf, so
// training on the merged rows grows the same trees.
struct UniqueRows {
    std::vector<std::uint32_t> first;  // lowest original row of each group
    std::vector<std::uint32_t> weight;
};

UniqueRows merge_duplicates(const FeatureMatrix& x, std::span<const double> y) {
    const auto n = y.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    auto less = [&](std::uint32_t a, std::uint32_t b) {
        for (const auto& col : x.columns)
            if (col[a] != col[b]) return col[a] < col[b];
        if (y[a] != y[b]) return y[a] < y[b];
        return a < b;
    };
    auto same = [&](std::uint32_t a, std::uint32_t b) {
        for (const auto& col : x.columns)
            if (col[a] != col[b]) return false;
        return y[a] == y[b];
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> groups;  // (first row, count)
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0 || !same(order[k - 1], order[k])) groups.emplace_back(order[k], 0);
        ++groups.back().second;
    }
    std::sort(groups.begin(), groups.end());
    UniqueRows u;
    for (auto [row, count] : groups) {
        u.first.push_back(row);
        u.weight.push_back(count);
    }
    return u;
}

// One unique row in a feature's sorted order. The value, weight and weighted
// residual travel with the index so split scans read memory sequentially.
struct Entry {
    double value;
    double wresidual;
    std::uint32_t index;
    std::uint32_t weight;
};

using SortedColumn = std::vector<Entry>;

// Per-feature order of the unique rows, kept sorted within every leaf's
// [begin, end) range.
std::vector<SortedColumn> presort(const FeatureMatrix& x, const UniqueRows& u) {
    const auto m = u.first.size();
    std::vector<SortedColumn> cols(x.cols());
    std::vector<std::uint32_t> idx(m);
    for (std::size_t f = 0; f < x.cols(); ++f) {
        const auto& col = x.columns[f];
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
            return col[u.first[a]] < col[u.first[b]];
        });
        cols[f].resize(m);
        for (std::size_t k = 0; k < m; ++k)
            cols[f][k] = Entry{col[u.first[idx[k]]], 0.0, idx[k], u.weight[idx[k]]};
    }
    return cols;
}

class TreeBuilder {
public:
    TreeBuilder(const LearnerSpec& spec, const std::vector<SortedColumn>& pristine,
                std::span<const std::uint32_t> weight, std::size_t n_original)
        : spec_(spec), pristine_(pristine), weight_(weight), m_(weight.size()), goes_left_(m_),
          inverse_(n_original + 1, 0.0) {
        for (std::size_t k = 1; k <= n_original; ++k) inverse_[k] = 1.0 / static_cast<double>(k);
        n_original_ = static_cast<std::uint32_t>(n_original);
        buffers_[0] = pristine_;
        buffers_[1] = pristine_;
    }

    // Fits one tree to the per-unique-row `residual`; `delta` receives the
    // shrunken leaf value for every unique row.
    BoostedTreesModel::Tree build(const std::vector<double>& residual, std::vector<double>& delta) {
        auto& cols = buffers_[0];
        for (std::size_t f = 0; f < cols.size(); ++f) {
            std::copy(pristine_[f].begin(), pristine_[f].end(), cols[f].begin());
            for (auto& e : cols[f]) e.wresidual = e.weight * residual[e.index];
        }
        BoostedTreesModel::Tree tree;
        tree.nodes.emplace_back();

        std::vector<Leaf> leaves;
        Leaf root;
        root.begin = 0;
        root.end = m_;
        root.weight = n_original_;
        double sq = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            root.sum += weight_[i] * residual[i];
            sq += weight_[i] * residual[i] * residual[i];
        }
        min_gain_ = 1e-14 * sq;
        root.best = best_split(root);
        leaves.push_back(root);

        while (static_cast<int>(leaves.size()) < spec_.max_leaves) {
            std::size_t pick = leaves.size();
            double best_gain = min_gain_;
            for (std::size_t k = 0; k < leaves.size(); ++k) {
                if (leaves[k].best.feature >= 0 && leaves[k].best.gain > best_gain) {
                    best_gain = leaves[k].best.gain;
                    pick = k;
                }
            }
            if (pick == leaves.size()) break;
            auto [left, right] = split(leaves[pick], tree);
            leaves[pick] = left;
            leaves.push_back(right);
        }

        for (const auto& leaf : leaves) {
            const double value = spec_.learning_rate * leaf.sum / static_cast<double>(leaf.weight);
            tree.nodes[static_cast<std::size_t>(leaf.node)].value = value;
            const auto& col = buffers_[leaf.buffer][0];
            for (std::size_t k = leaf.begin; k < leaf.end; ++k) delta[col[k].index] = value;
        }
        return tree;
    }

private:
    Split best_split(const Leaf& leaf) const {
        Split best;
        const auto min_leaf = static_cast<std::uint32_t>(std::max(1, spec_.min_leaf_samples));
        if (leaf.weight < 2 * min_leaf) return best;
        const double total = leaf.sum;
        const double parent = total * total * inverse_[leaf.weight];
        const double* inv = inverse_.data();
        const auto& cols = buffers_[leaf.buffer];
        for (std::size_t f = 0; f < cols.size(); ++f) {
            const Entry* e = cols[f].data();
            if (e[leaf.begin].value == e[leaf.end - 1].value) continue;
            double left_sum = 0.0;
            std::uint32_t nl = 0;
            for (std::size_t k = leaf.begin; k + 1 < leaf.end; ++k) {
                left_sum += e[k].wresidual;
                nl += e[k].weight;
                if (nl < min_leaf || e[k].value == e[k + 1].value) continue;
                const std::uint32_t nr = leaf.weight - nl;
                if (nr < min_leaf) break;
                const double right_sum = total - left_sum;
                const double gain =
                    left_sum * left_sum * inv[nl] + right_sum * right_sum * inv[nr] - parent;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.left_count = k - leaf.begin + 1;
                    double mid = 0.5 * (e[k].value + e[k + 1].value);
                    if (!(mid < e[k + 1].value)) mid = e[k].value;
                    best.threshold = mid;
                }
            }
        }
        return best;
    }

    std::pair<Leaf, Leaf> split(const Leaf& leaf, BoostedTreesModel::Tree& tree) {
        const auto f = static_cast<std::size_t>(leaf.best.feature);
        const std::size_t mid = leaf.begin + leaf.best.left_count;
        const auto& src = buffers_[leaf.buffer];
        auto& dst = buffers_[1 - leaf.buffer];

        double left_sum = 0.0;
        std::uint32_t left_weight = 0;
        {
            const Entry* e = src[f].data();
            for (std::size_t k = leaf.begin; k < leaf.end; ++k) goes_left_[e[k].index] = k < mid;
            for (std::size_t k = leaf.begin; k < mid; ++k) {
                left_sum += e[k].wresidual;
                left_weight += e[k].weight;
            }
            std::copy(e + leaf.begin, e + leaf.end, dst[f].data() + leaf.begin);
        }
        // Both children are written to the other buffer in sorted order; the
        // left count is known, so no scratch space is needed.
        for (std::size_t g = 0; g < src.size(); ++g) {
            if (g == f) continue;
            const Entry* in = src[g].data();
            Entry* out = dst[g].data();
            std::size_t lo = leaf.begin, hi = mid;
            for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
                const std::size_t left = goes_left_[in[k].index];
                out[left ? lo : hi] = in[k];
                lo += left;
                hi += 1 - left;
            }
        }

        const int left_node = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& parent = tree.nodes[static_cast<std::size_t>(leaf.node)];
        parent.feature = leaf.best.feature;
        parent.threshold = leaf.best.threshold;
        parent.left = left_node;
        parent.right = left_node + 1;

        const int buffer = 1 - leaf.buffer;
        Leaf left{leaf.begin, mid, left_sum, left_weight, left_node, buffer, {}};
        Leaf right{mid, leaf.end, leaf.sum - left_sum, leaf.weight - left_weight, left_node + 1, buffer, {}};
        left.best = best_split(left);
        right.best = best_split(right);
        return {left, right};
    }

    const LearnerSpec& spec_;
    const std::vector<SortedColumn>& pristine_;
    std::span<const std::uint32_t> weight_;
    std::size_t m_;
    std::uint32_t n_original_ = 0;
    std::vector<SortedColumn> buffers_[2];
    std::vector<char> goes_left_;
    std::vector<double> inverse_;
    double min_gain_ = 0.0;
};

}  // namespace

double BoostedTreesModel::predict_row(std::span<const double> row) const {
    double v = base_score;
    for (const auto& t : trees) {
        std::size_t k = 0;
        while (t.nodes[k].feature >= 0) {
            const auto& node = t.nodes[k];
            k = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                             ? node.left
                                             : node.right);
        }
        v += t.nodes[k].value;
    }
    return v;
}

BoostedTreesModel train_boosted_trees(const LearnerSpec& spec, const FeatureMatrix& x,
                                      std::span<const double> y) {
    const auto n = y.size();
    BoostedTreesModel model;
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (x.cols() == 0) {
        // No features: the ensemble is the mean.
        return model;
    }
    const auto unique = merge_duplicates(x, y);
    const auto m = unique.first.size();
    std::vector<double> target(m), fitted(m, model.base_score), residual(m), delta(m);
    for (std::size_t k = 0; k < m; ++k) target[k] = y[unique.first[k]];

    const auto sorted = presort(x, unique);
    TreeBuilder builder(spec, sorted, unique.weight, n);
    model.trees.reserve(static_cast<std::size_t>(spec.trees));
    for (int t = 0; t < spec.trees; ++t) {
        for (std::size_t k = 0; k < m; ++k) residual[k] = target[k] - fitted[k];
        model.trees.push_back(builder.build(residual, delta));
        double sse = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            fitted[k] += delta[k];
            const double e = target[k] - fitted[k];
            sse += unique.weight[k] * e * e;
        }
        model.train_loss.push_back(sse / static_cast<double>(n));
    }
    return model;
}

}  // namespace merit
