#pragma once

#include <array>
#include <string>
#include <vector>

#include "runoff/boosting.hpp"
#include "runoff/chain_ladder.hpp"
#include "runoff/errors.hpp"
#include "runoff/forest.hpp"
#include "runoff/grid_search.hpp"
#include "runoff/neural_net.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// One level-2 record: the five first-level views of a cell. Order:
// forest, boosting, net, development factor (of the cell's lag), csr.
struct StackedCell {
    int i = 0;
    int j = 0;
    std::array<double, 5> x{};
    Split split = Split::lower;
    double target = 0.0;  // scaled observed payment; meaningful off the lower triangle
};

struct Level1Grids {
    SquareGrid rf;
    SquareGrid gb;
    SquareGrid ann;
    SquareGrid csr;
    DevFactors cl;
};

template <typename Model>
SquareGrid predict_grid(const Model& model, int n) {
    SquareGrid grid(n);
    std::vector<double> x(2);
    for (int i = 1; i <= n; ++i) {
        x[0] = ay_star(i, n);
        for (int j = 1; j <= n; ++j) {
            x[1] = dy_star(j, n);
            grid.at(i, j) = model.predict(x);
        }
    }
    return grid;
}

// Positional pass-through of the five sources onto the full rectangle; no
// normalisation is applied.
inline std::vector<StackedCell> assemble_features(const Level1Grids& grids, const CompanyDataset& ds) {
    const int n = ds.n();
    auto check = [&](const SquareGrid& g, const char* name) {
        if (g.n() != n) throw AssemblyError(std::string("assemble_features: missing or mis-sized ") + name +
                                            " grid (" + std::to_string(g.n()) + " vs n=" + std::to_string(n) + ")");
    };
    check(grids.rf, "forest");
    check(grids.gb, "boosting");
    check(grids.ann, "net");
    check(grids.csr, "csr");
    if (grids.cl.n() != n)
        throw AssemblyError("assemble_features: missing or mis-sized development-factor vector");

    std::vector<StackedCell> cells;
    cells.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            StackedCell c;
            c.i = i;
            c.j = j;
            c.x = {grids.rf.at(i, j), grids.gb.at(i, j), grids.ann.at(i, j), grids.cl.at(j),
                   grids.csr.at(i, j)};
            if (i + j <= n + 1) {
                c.split = (i + j == n + 1) ? Split::test : Split::train;
                c.target = ds.rectangle.at(i, j) / ds.premiums[static_cast<std::size_t>(i - 1)];
            } else {
                c.split = Split::lower;
            }
            cells.push_back(c);
        }
    }
    return cells;
}

struct Level2Fit {
    NeuralNet net;
    double theta = 0.0;
    std::size_t grid_index = 0;
    std::vector<std::string> warnings;
};

// Trains the stacking net on the upper-triangle records, selecting the
// dropout rate on the test diagonal. Divergent grid points are skipped.
inline Level2Fit fit_level2(const std::vector<StackedCell>& cells, const std::vector<double>& theta_grid,
                            int depth, std::uint64_t seed, int epochs = 10000, double learning_rate = 0.01,
                            int width = 5) {
    std::vector<Sample> train, test;
    for (const auto& c : cells) {
        if (c.split == Split::lower) continue;
        Sample s;
        s.x.assign(c.x.begin(), c.x.end());
        s.y = c.target;
        (c.split == Split::train ? train : test).push_back(std::move(s));
    }
    if (train.empty() || test.empty())
        throw ArgumentError("fit_level2: need upper-triangle records with a test diagonal");

    auto fit = [&](double theta, std::size_t k) {
        AnnOptions options;
        options.depth = depth;
        options.width = width;
        options.theta = theta;
        options.epochs = epochs;
        options.learning_rate = learning_rate;
        options.seed = derive_seed(seed, "level2_theta", static_cast<std::uint64_t>(k));
        return fit_ann(train, options);
    };
    auto score = [&](const NeuralNet& net) {
        std::vector<double> preds, targets;
        preds.reserve(test.size());
        targets.reserve(test.size());
        for (const auto& s : test) {
            preds.push_back(net.predict(s.x));
            targets.push_back(s.y);
        }
        return rmse(preds, targets);
    };
    auto result = grid_search(theta_grid, fit, score, /*skip_failures=*/true);
    Level2Fit out;
    out.net = std::move(result.model);
    out.theta = result.config;
    out.grid_index = result.index;
    out.warnings = std::move(result.warnings);
    return out;
}

struct StackedPrediction {
    SquareGrid scaled;  // level-2 output on every cell of the rectangle
    double reserve = 0.0;
    double next_year_payments = 0.0;
    double ultimate = 0.0;
};

// Substep one produced the level-1 views in `cells`; substep two runs the
// stacking net over them. The reserve keeps the observed diagonal as paid.
inline StackedPrediction predict_rectangle(const NeuralNet& level2, const std::vector<StackedCell>& cells,
                                           const CompanyDataset& ds) {
    const int n = ds.n();
    StackedPrediction out;
    out.scaled = SquareGrid(n);
    std::vector<double> x(5);
    for (const auto& c : cells) {
        x.assign(c.x.begin(), c.x.end());
        out.scaled.at(c.i, c.j) = level2.predict(x);
    }
    for (int i = 1; i <= n; ++i) {
        const double premium = ds.premiums[static_cast<std::size_t>(i - 1)];
        const int lag = ds.last_lag(i);
        const double paid_star = ds.rectangle.at(i, lag) / premium;
        out.reserve += premium * (out.scaled.at(i, n) - paid_star);
        out.ultimate += premium * out.scaled.at(i, n);
        if (lag < n) out.next_year_payments += premium * (out.scaled.at(i, lag + 1) - paid_star);
    }
    return out;
}

}  // namespace runoff
