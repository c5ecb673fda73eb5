#pragma once

#include <limits>
#include <string>
#include <vector>

#include "runoff/errors.hpp"

namespace runoff {

template <typename Config, typename Model>
struct GridSearchResult {
    Config config{};
    Model model{};
    std::size_t index = 0;
    double test_rmse = 0.0;
    std::vector<double> all_rmse;           // NaN for skipped points
    std::vector<std::string> warnings;
};

// Fits every grid point and keeps the test-RMSE minimiser; ties go to the
// earliest grid point. With skip_failures, points whose fit throws are
// excluded with a warning instead of aborting the search.
template <typename Config, typename FitFn, typename ScoreFn>
auto grid_search(const std::vector<Config>& grid, FitFn&& fit, ScoreFn&& score, bool skip_failures = false) {
    using Model = decltype(fit(grid.front(), std::size_t{0}));
    if (grid.empty()) throw ArgumentError("grid_search: empty grid");
    GridSearchResult<Config, Model> best;
    bool found = false;
    best.all_rmse.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Model model;
        try {
            model = fit(grid[k], k);
        } catch (const Error& e) {
            if (!skip_failures) throw;
            best.warnings.push_back("grid point " + std::to_string(k) + " skipped: " + e.what());
            continue;
        }
        const double r = score(model);
        best.all_rmse[k] = r;
        if (!found || r < best.test_rmse) {
            found = true;
            best.index = k;
            best.config = grid[k];
            best.model = std::move(model);
            best.test_rmse = r;
        }
    }
    if (!found) throw Error("grid_search: every grid point failed");
    return best;
}

}  // namespace runoff
