#pragma once

#include <vector>

#include "runoff/errors.hpp"
#include "runoff/rng.hpp"
#include "runoff/tree.hpp"

namespace runoff {

// Stage-wise least-squares boosting of regression trees on the residuals.
struct BoostModel {
    double initial_value = 0.0;
    std::vector<RegressionTree> trees;
    double learning_rate = 0.01;
    int min_leaf = 1;
    double subsample_fraction = 0.5;

    double predict(const std::vector<double>& x) const {
        double s = initial_value;
        for (const auto& t : trees) s += learning_rate * t.predict(x);
        return s;
    }
};

inline BoostModel fit_gb(const std::vector<Sample>& samples, int n_trees, int min_leaf, std::uint64_t seed,
                         double subsample_fraction = 0.5, double learning_rate = 0.01) {
    if (samples.empty()) throw ArgumentError("fit_gb: no samples");
    if (n_trees < 1) throw ArgumentError("fit_gb: B must be >= 1");
    if (min_leaf < 1) throw ArgumentError("fit_gb: Obs must be >= 1");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
        throw ArgumentError("fit_gb: subsample fraction outside (0,1]");

    BoostModel model;
    model.learning_rate = learning_rate;
    model.min_leaf = min_leaf;
    model.subsample_fraction = subsample_fraction;
    {
        double s = 0.0;
        for (const auto& smp : samples) s += smp.y;
        model.initial_value = s / static_cast<double>(samples.size());
    }

    std::vector<double> residual(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) residual[k] = samples[k].y - model.initial_value;

    const std::size_t subset_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(subsample_fraction * static_cast<double>(samples.size())));
    std::vector<std::size_t> pool(samples.size());
    std::vector<Sample> stage;
    model.trees.reserve(static_cast<std::size_t>(n_trees));
    for (int b = 0; b < n_trees; ++b) {
        Rng rng(derive_seed(seed, "gb_stage", static_cast<std::uint64_t>(b)));
        for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k;
        for (std::size_t k = 0; k < subset_size; ++k)
            std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);

        stage.clear();
        stage.reserve(subset_size);
        for (std::size_t k = 0; k < subset_size; ++k)
            stage.push_back(Sample{samples[pool[k]].x, residual[pool[k]]});

        RegressionTree tree = RegressionTree::fit(stage, min_leaf);
        for (std::size_t k = 0; k < samples.size(); ++k)
            residual[k] -= learning_rate * tree.predict(samples[k].x);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace runoff
