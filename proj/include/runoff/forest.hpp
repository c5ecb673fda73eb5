#pragma once

#include <numeric>
#include <vector>

#include "runoff/errors.hpp"
#include "runoff/rng.hpp"
#include "runoff/tree.hpp"

namespace runoff {

// Bagged regression trees with per-split feature subsampling; the forest
// prediction is the arithmetic mean of the trees.
struct ForestModel {
    std::vector<RegressionTree> trees;
    int n_feature_sample = 2;
    int min_leaf = 1;

    double predict(const std::vector<double>& x) const {
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(x);
        return s / static_cast<double>(trees.size());
    }
};

struct RfOptions {
    bool bootstrap_rows = true;  // test hook: false trains every tree on the full sample
};

inline ForestModel fit_rf(const std::vector<Sample>& samples, int n_trees, int n_feature_sample,
                          int min_leaf, std::uint64_t seed, const RfOptions& options = {}) {
    if (samples.empty()) throw ArgumentError("fit_rf: no samples");
    if (n_trees < 1) throw ArgumentError("fit_rf: B must be >= 1");
    const int n_features = static_cast<int>(samples.front().x.size());
    if (n_feature_sample < 1 || n_feature_sample > n_features)
        throw ArgumentError("fit_rf: N must be in [1, " + std::to_string(n_features) + "]");

    ForestModel model;
    model.n_feature_sample = n_feature_sample;
    model.min_leaf = min_leaf;
    model.trees.reserve(static_cast<std::size_t>(n_trees));
    for (int b = 0; b < n_trees; ++b) {
        Rng rng(derive_seed(seed, "rf_tree", static_cast<std::uint64_t>(b)));
        std::vector<std::size_t> idx(samples.size());
        if (options.bootstrap_rows) {
            for (auto& k : idx) k = rng.index(samples.size());
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        model.trees.push_back(RegressionTree::fit_on(samples, idx, min_leaf, &rng, n_feature_sample));
    }
    return model;
}

}  // namespace runoff
