#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "runoff/errors.hpp"
#include "runoff/rng.hpp"

namespace runoff {

struct Sample {
    std::vector<double> x;
    double y = 0.0;
};

inline double rmse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.empty() || predictions.size() != targets.size())
        throw ArgumentError("rmse: empty or mismatched vectors");
    double ss = 0.0;
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        const double d = predictions[k] - targets[k];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(predictions.size()));
}

// CART regression tree: greedy binary splits minimizing the summed
// within-child squared error. Splits are midpoints between consecutive
// distinct feature values; both children must keep >= min_leaf samples; ties
// break toward the lowest feature index, then the lowest threshold.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        double value = 0.0;  // leaf mean
        int left = -1;
        int right = -1;
    };

    static RegressionTree fit(const std::vector<Sample>& samples, int min_leaf) {
        std::vector<std::size_t> idx(samples.size());
        std::iota(idx.begin(), idx.end(), 0);
        return fit_on(samples, idx, min_leaf, nullptr, 0);
    }

    // Random-forest variant: a fresh random subset of n_feature_sample
    // features is considered at every split.
    static RegressionTree fit_on(const std::vector<Sample>& samples, const std::vector<std::size_t>& idx,
                                 int min_leaf, Rng* rng, int n_feature_sample) {
        if (samples.empty() || idx.empty()) throw ArgumentError("RegressionTree::fit: no samples");
        if (min_leaf < 1) throw ArgumentError("RegressionTree::fit: min_leaf must be >= 1");
        RegressionTree tree;
        std::vector<std::size_t> work = idx;
        tree.build(samples, work, 0, work.size(), min_leaf, rng, n_feature_sample);
        return tree;
    }

    double predict(const std::vector<double>& x) const {
        int node = 0;
        for (;;) {
            const Node& cur = nodes_[static_cast<std::size_t>(node)];
            if (cur.feature < 0) return cur.value;
            node = x[static_cast<std::size_t>(cur.feature)] <= cur.threshold ? cur.left : cur.right;
        }
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t leaf_count() const {
        std::size_t k = 0;
        for (const Node& node : nodes_)
            if (node.feature < 0) ++k;
        return k;
    }

private:
    struct BestSplit {
        bool found = false;
        int feature = -1;
        double threshold = 0.0;
        double children_sse = 0.0;
    };

    // Builds the subtree over idx[begin, end), returns its node index.
    int build(const std::vector<Sample>& samples, std::vector<std::size_t>& idx, std::size_t begin,
              std::size_t end, int min_leaf, Rng* rng, int n_feature_sample) {
        const std::size_t count = end - begin;
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            sum += samples[idx[k]].y;
            sum_sq += samples[idx[k]].y * samples[idx[k]].y;
        }
        const double mean = sum / static_cast<double>(count);
        const double node_sse = std::max(0.0, sum_sq - sum * sum / static_cast<double>(count));

        const int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{-1, 0.0, mean, -1, -1});
        if (count < 2 * static_cast<std::size_t>(min_leaf)) return node_id;

        const int n_features = static_cast<int>(samples[idx[begin]].x.size());
        std::vector<int> features;
        if (rng != nullptr && n_feature_sample < n_features) {
            // Draw the feature subset, then scan in index order for stable ties.
            std::vector<int> pool(static_cast<std::size_t>(n_features));
            std::iota(pool.begin(), pool.end(), 0);
            for (int k = 0; k < n_feature_sample; ++k)
                std::swap(pool[static_cast<std::size_t>(k)],
                          pool[static_cast<std::size_t>(k) + rng->index(static_cast<std::size_t>(n_features - k))]);
            features.assign(pool.begin(), pool.begin() + n_feature_sample);
            std::sort(features.begin(), features.end());
        } else {
            features.resize(static_cast<std::size_t>(n_features));
            std::iota(features.begin(), features.end(), 0);
        }

        BestSplit best;
        std::vector<std::size_t> order(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                       idx.begin() + static_cast<std::ptrdiff_t>(end));
        for (int f : features) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return samples[a].x[static_cast<std::size_t>(f)] < samples[b].x[static_cast<std::size_t>(f)];
            });
            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t k = 0; k + 1 < count; ++k) {
                const double y = samples[order[k]].y;
                left_sum += y;
                left_sq += y * y;
                const double xv = samples[order[k]].x[static_cast<std::size_t>(f)];
                const double xn = samples[order[k + 1]].x[static_cast<std::size_t>(f)];
                if (xv == xn) continue;
                const std::size_t left_n = k + 1;
                const std::size_t right_n = count - left_n;
                if (left_n < static_cast<std::size_t>(min_leaf) || right_n < static_cast<std::size_t>(min_leaf))
                    continue;
                const double right_sum = sum - left_sum;
                const double right_sq = sum_sq - left_sq;
                const double sse =
                    std::max(0.0, left_sq - left_sum * left_sum / static_cast<double>(left_n)) +
                    std::max(0.0, right_sq - right_sum * right_sum / static_cast<double>(right_n));
                if (!best.found || sse < best.children_sse) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = 0.5 * (xv + xn);
                    best.children_sse = sse;
                }
            }
        }
        if (!best.found || best.children_sse >= node_sse) return node_id;

        const auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                        idx.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t s) {
                                            return samples[s].x[static_cast<std::size_t>(best.feature)] <=
                                                   best.threshold;
                                        });
        const std::size_t split_at = static_cast<std::size_t>(mid - idx.begin());
        nodes_[static_cast<std::size_t>(node_id)].feature = best.feature;
        nodes_[static_cast<std::size_t>(node_id)].threshold = best.threshold;
        const int left = build(samples, idx, begin, split_at, min_leaf, rng, n_feature_sample);
        nodes_[static_cast<std::size_t>(node_id)].left = left;
        const int right = build(samples, idx, split_at, end, min_leaf, rng, n_feature_sample);
        nodes_[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }

    std::vector<Node> nodes_;
};

inline RegressionTree fit_tree(const std::vector<Sample>& samples, int min_leaf) {
    return RegressionTree::fit(samples, min_leaf);
}

}  // namespace runoff
