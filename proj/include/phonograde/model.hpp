#pragma once

// Random-forest regression over 64-dim spectral feature vectors.
//
// Each tree is grown on a bootstrap sample drawn from the canonically sorted
// training set. At every node `max_features` candidate features are drawn
// without replacement and the split minimizing the summed squared error of
// the two children is taken; thresholds sit at midpoints between consecutive
// distinct values. Tree t draws from its own splitmix64 stream seeded with
// seed ^ fnv1a64("<key>|tree:<t>"), so trees can be grown in any order.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phonograde/corpus.hpp"
#include "phonograde/error.hpp"
#include "phonograde/features.hpp"
#include "phonograde/parallel.hpp"
#include "phonograde/rng.hpp"

namespace phonograde {

struct RfConfig {
    std::size_t n_trees = 100;
    std::size_t max_features = (kFeatureDim + 2) / 3;  // ceil(64/3) = 22
    std::size_t min_leaf_size = 5;
    std::optional<std::size_t> max_depth;              // unlimited when empty
    std::uint64_t seed = 0;

    void validate() const
    {
        if (n_trees == 0) {
            throw UsageError("n_trees must be >= 1");
        }
        if (max_features == 0 || max_features > kFeatureDim) {
            throw UsageError("max_features must be in [1, 64]");
        }
        if (min_leaf_size == 0) {
            throw UsageError("min_leaf_size must be >= 1");
        }
    }
};

class RegressionTree {
public:
    struct Node {
        int feature = -1;  ///< -1 marks a leaf
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        double value = 0.0;
    };

    [[nodiscard]] double predict(std::span<const double> x) const noexcept
    {
        std::uint32_t i = 0;
        while (nodes_[i].feature >= 0) {
            const Node& n = nodes_[i];
            i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[i].value;
    }

    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }

    /// Builds a tree directly from nodes; node 0 is the root.
    static RegressionTree from_nodes(std::vector<Node> nodes)
    {
        RegressionTree t;
        t.nodes_ = std::move(nodes);
        return t;
    }

private:
    friend class TreeBuilder;
    std::vector<Node> nodes_;
};

/// Training matrix plus targets, with each feature's row order
/// presorted once and shared by every tree.
class TrainingSet {
public:
    TrainingSet(const std::vector<double>& x, std::vector<double> y) : y_(std::move(y))
    {
        const std::size_t n = y_.size();
        // Column-major, so split scans walk one contiguous column.
        x_.resize(x.size());
        for (std::size_t row = 0; row < n; ++row) {
            for (std::size_t f = 0; f < kFeatureDim; ++f) {
                x_[f * n + row] = x[row * kFeatureDim + f];
            }
        }
        for (std::size_t f = 0; f < kFeatureDim; ++f) {
            auto& order = sorted_[f];
            order.resize(n);
            std::iota(order.begin(), order.end(), std::uint32_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return at(a, f) < at(b, f); });
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return y_.size(); }
    [[nodiscard]] double at(std::size_t row, std::size_t f) const noexcept { return x_[f * y_.size() + row]; }
    [[nodiscard]] const double* column(std::size_t f) const noexcept { return x_.data() + f * y_.size(); }
    [[nodiscard]] double target(std::size_t row) const noexcept { return y_[row]; }
    [[nodiscard]] const double* targets() const noexcept { return y_.data(); }
    [[nodiscard]] const std::vector<std::uint32_t>& sorted(std::size_t f) const noexcept { return sorted_[f]; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::array<std::vector<std::uint32_t>, kFeatureDim> sorted_;
};

/// Grows one tree. Node samples are kept as contiguous ranges inside 64
/// per-feature order arrays; a split stably partitions every array.
/// Bootstrap duplicates are folded into per-row weights, which leaves sums
/// and counts (and therefore every split) unchanged.
class TreeBuilder {
public:
    TreeBuilder(const TrainingSet& data, const RfConfig& config, SplitMix64 rng)
        : data_(data), config_(config), rng_(rng)
    {
    }

    RegressionTree build()
    {
        const std::size_t n = data_.size();
        weight_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++weight_[rng_.below(n)];
        }
        // Rows drawn more than once appear once, carrying their multiplicity.
        for (std::size_t f = 0; f < kFeatureDim; ++f) {
            auto& order = order_[0][f];
            order.clear();
            for (std::uint32_t row : data_.sorted(f)) {
                if (weight_[row] > 0) {
                    order.push_back(row);
                }
            }
            order_[1][f].resize(order.size());
        }
        goes_left_.assign(n, 0);

        RegressionTree tree;
        tree.nodes_.emplace_back();
        grow(tree, 0, 0, order_[0][0].size(), 0);
        return tree;
    }

private:
    using OrderSet = std::array<std::vector<std::uint32_t>, kFeatureDim>;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = -std::numeric_limits<double>::infinity();
        std::size_t rows_left = 0;  ///< distinct rows sent left
    };

    // A node at depth d finds its rows in order_[d % 2] over [begin, end) and
    // partitions them into order_[(d + 1) % 2] over the same range. Sibling
    // ranges are disjoint, so the two buffers never clobber live data.
    void grow(RegressionTree& tree, std::uint32_t node, std::size_t begin, std::size_t end, std::size_t depth)
    {
        auto& current = order_[depth % 2];
        auto& next = order_[(depth + 1) % 2];
        const auto& rows = current[0];
        double sum = 0.0;
        std::size_t count = 0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
            const double y = data_.target(rows[i]);
            const std::uint32_t w = weight_[rows[i]];
            sum += w * y;
            count += w;
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        tree.nodes_[node].value = sum / static_cast<double>(count);

        const bool depth_capped = config_.max_depth && depth >= *config_.max_depth;
        if (depth_capped || count < 2 * config_.min_leaf_size || lo == hi) {
            return;
        }

        const Split split = best_split(current, begin, end, sum, count);
        if (split.feature < 0) {
            return;
        }

        const auto f = static_cast<std::size_t>(split.feature);
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t row = current[f][i];
            goes_left_[row] = data_.at(row, f) <= split.threshold ? 1 : 0;
        }
        for (std::size_t g = 0; g < kFeatureDim; ++g) {
            const std::uint32_t* src = current[g].data();
            std::uint32_t* out = next[g].data();
            std::size_t li = begin;
            std::size_t ri = begin + split.rows_left;
            // Branch-free stable partition; the side is data-dependent noise.
            for (std::size_t i = begin; i < end; ++i) {
                const std::uint32_t row = src[i];
                const std::size_t l = goes_left_[row];
                out[l ? li : ri] = row;
                li += l;
                ri += 1 - l;
            }
        }

        const auto left = static_cast<std::uint32_t>(tree.nodes_.size());
        tree.nodes_.emplace_back();
        tree.nodes_.emplace_back();
        auto& parent = tree.nodes_[node];
        parent.feature = split.feature;
        parent.threshold = split.threshold;
        parent.left = left;
        parent.right = left + 1;
        const std::size_t mid = begin + split.rows_left;
        grow(tree, left, begin, mid, depth + 1);
        grow(tree, left + 1, mid, end, depth + 1);
    }

    /// Maximizes S_l^2/n_l + S_r^2/n_r, which minimizes the children's summed
    /// squared error. Candidates are scanned by ascending feature index and
    /// threshold and only a strictly better score replaces the incumbent, so
    /// ties resolve to the lower (feature, threshold).
    Split best_split(const OrderSet& current, std::size_t begin, std::size_t end, double total, std::size_t count)
    {
        std::array<std::uint8_t, kFeatureDim> perm{};
        std::iota(perm.begin(), perm.end(), std::uint8_t{0});
        const std::size_t mtry = config_.max_features;
        for (std::size_t j = 0; j < mtry; ++j) {
            const std::size_t r = j + rng_.below(kFeatureDim - j);
            std::swap(perm[j], perm[r]);
        }
        std::sort(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(mtry));

        const std::size_t min_leaf = config_.min_leaf_size;
        const double* y = data_.targets();
        Split best;
        for (std::size_t c = 0; c < mtry; ++c) {
            const std::size_t f = perm[c];
            const auto& order = current[f];
            const double* col = data_.column(f);
            double left_sum = 0.0;
            std::size_t n_left = 0;
            for (std::size_t i = begin; i + 1 < end; ++i) {
                const std::uint32_t row = order[i];
                const std::uint32_t w = weight_[row];
                left_sum += w * y[row];
                n_left += w;
                const std::size_t n_right = count - n_left;
                if (n_left < min_leaf) {
                    continue;
                }
                if (n_right < min_leaf) {
                    break;
                }
                const double a = col[row];
                const double b = col[order[i + 1]];
                if (!(a < b)) {
                    continue;
                }
                const double right_sum = total - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(n_left) +
                                     right_sum * right_sum / static_cast<double>(n_right);
                if (score > best.score) {
                    double threshold = a + (b - a) / 2.0;
                    if (threshold >= b) {
                        threshold = a;
                    }
                    best = {static_cast<int>(f), threshold, score, i - begin + 1};
                }
            }
        }
        return best;
    }

    const TrainingSet& data_;
    const RfConfig& config_;
    SplitMix64 rng_;
    std::array<OrderSet, 2> order_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> weight_;  ///< bootstrap multiplicity per row
};

class Forest {
public:
    Forest(std::vector<RegressionTree> trees, RfConfig config, double target_min, double target_max)
        : trees_(std::move(trees)), config_(config), target_min_(target_min), target_max_(target_max)
    {
    }

    [[nodiscard]] double predict(std::span<const double> x) const
    {
        if (x.size() != kFeatureDim) {
            throw Error("dimension mismatch: forest expects " + std::to_string(kFeatureDim) + " features, got " +
                        std::to_string(x.size()));
        }
        double sum = 0.0;
        for (const auto& t : trees_) {
            sum += t.predict(x);
        }
        return sum / static_cast<double>(trees_.size());
    }

    [[nodiscard]] double predict(const FeatureVector& fv) const { return predict(std::span<const double>(fv.values)); }

    [[nodiscard]] const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
    [[nodiscard]] const RfConfig& config() const noexcept { return config_; }
    [[nodiscard]] double target_min() const noexcept { return target_min_; }
    [[nodiscard]] double target_max() const noexcept { return target_max_; }

private:
    std::vector<RegressionTree> trees_;
    RfConfig config_;
    double target_min_;
    double target_max_;
};

/// Seed of tree `index`'s stream.
inline std::uint64_t tree_seed(std::uint64_t master_seed, const std::string& stream_key, std::size_t index)
{
    return master_seed ^ fnv1a64(stream_key + "|tree:" + std::to_string(index));
}

/// Trains on `instances`, which are first put in canonical order so the
/// bootstrap draws do not depend on input order. `stream_key` names the
/// random streams (conventionally "symptom|phoneme").
inline Forest train_forest(std::span<const Instance> instances, const RfConfig& config,
                           const std::string& stream_key, std::size_t jobs = 1)
{
    config.validate();
    if (instances.empty()) {
        throw Error("cannot train a forest on an empty dataset");
    }
    std::vector<const Instance*> sorted;
    sorted.reserve(instances.size());
    for (const auto& inst : instances) {
        sorted.push_back(&inst);
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Instance* a, const Instance* b) { return canonical_less(*a, *b); });

    std::vector<double> x;
    std::vector<double> y;
    x.reserve(sorted.size() * kFeatureDim);
    y.reserve(sorted.size());
    for (const Instance* inst : sorted) {
        x.insert(x.end(), inst->features.values.begin(), inst->features.values.end());
        y.push_back(static_cast<double>(inst->rating));
    }
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double target_min = *lo;
    const double target_max = *hi;
    const TrainingSet data(x, std::move(y));

    std::vector<RegressionTree> trees(config.n_trees);
    parallel_for(config.n_trees, jobs, [&](std::size_t t) {
        TreeBuilder builder(data, config, SplitMix64(tree_seed(config.seed, stream_key, t)));
        trees[t] = builder.build();
    });
    return Forest(std::move(trees), config, target_min, target_max);
}

inline Forest train_forest(const Dataset& data, const RfConfig& config, std::size_t jobs = 1)
{
    return train_forest(data.instances, config, data.symptom + "|" + data.phoneme, jobs);
}

inline double predict_forest(const Forest& forest, const FeatureVector& x) { return forest.predict(x); }

}  // namespace phonograde
