#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "runoff/chain_ladder.hpp"
#include "runoff/distribution.hpp"
#include "runoff/errors.hpp"
#include "runoff/rng.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// Distribution-free Chain Ladder: development factors plus the per-lag
// variance parameters sigma2[j] of the conditional law
// Var[D_ij | D_i,j-1] = sigma2_j * D_i,j-1.
struct MackFit {
    int n = 0;
    DevFactors factors;
    std::vector<double> sigma2;              // index j-1 for lag j-1 -> j, sigma2[0] unused (= 0)
    std::vector<double> scaled_residuals;    // (F_ij - lambda_j) * sqrt(D_i,j-1) / sigma_j
    SquareGrid observed_cumulative;

    double sigma2_at(int j) const { return sigma2[static_cast<std::size_t>(j - 1)]; }
};

inline MackFit fit_mack(const LossTriangle& triangle) {
    const LossTriangle cumulative = convert(triangle, Kind::cumulative);
    const int n = cumulative.n();
    if (n < 4) throw EstimationError("fit_mack: need n >= 4 to extrapolate the last variance parameter");

    MackFit fit;
    fit.n = n;
    fit.factors = dev_factors(cumulative);
    fit.observed_cumulative = cumulative.cells();
    fit.sigma2.assign(static_cast<std::size_t>(n), 0.0);

    // sigma2_j from the weighted squared factor deviations; the last lag has a
    // single pair and is filled by Mack's extrapolation rule.
    for (int j = 2; j <= n - 1; ++j) {
        const int pairs = n - j + 1;
        if (pairs < 2)
            throw EstimationError("fit_mack: single pair at lag " + std::to_string(j) +
                                  " with no extrapolation possible");
        double ss = 0.0;
        for (int i = 1; i <= pairs; ++i) {
            const double prev = cumulative.at(i, j - 1);
            if (!(prev > 0.0))
                throw EstimationError("fit_mack: non-positive cumulative at (" + std::to_string(i) + "," +
                                      std::to_string(j - 1) + ")");
            const double ratio = cumulative.at(i, j) / prev;
            const double d = ratio - fit.factors.at(j);
            ss += prev * d * d;
        }
        fit.sigma2[static_cast<std::size_t>(j - 1)] = ss / (pairs - 1);
    }
    {
        const double s_nm1 = fit.sigma2[static_cast<std::size_t>(n - 2)];  // lag n-1
        const double s_nm2 = fit.sigma2[static_cast<std::size_t>(n - 3)];  // lag n-2
        const double floor = std::min(s_nm1, s_nm2);
        double extrapolated = floor;
        if (s_nm2 > 0.0) extrapolated = std::min(s_nm1 * s_nm1 / s_nm2, floor);
        fit.sigma2[static_cast<std::size_t>(n - 1)] = extrapolated;
    }

    for (int j = 2; j <= n; ++j) {
        const double sigma = std::sqrt(fit.sigma2_at(j));
        if (sigma == 0.0) continue;  // exact column: structural zero residuals stay out of the pool
        for (int i = 1; i + j <= n + 1; ++i) {
            const double prev = cumulative.at(i, j - 1);
            const double ratio = cumulative.at(i, j) / prev;
            const double r = (ratio - fit.factors.at(j)) * std::sqrt(prev) / sigma;
            if (r != 0.0) fit.scaled_residuals.push_back(r);
        }
    }
    return fit;
}

struct MackBootstrapOptions {
    bool process_error = true;  // test hook
};

// Bootstraps estimation error by rebuilding a pseudo-triangle from resampled
// scaled residuals and refitting the factors, then walks the observed
// diagonal forward adding normal process noise with the fitted conditional
// variance.
inline ReserveDistribution mack_bootstrap(const MackFit& fit, std::size_t n_sims, std::uint64_t seed,
                                          const MackBootstrapOptions& options = {}) {
    if (n_sims == 0) throw ArgumentError("mack_bootstrap: n_sims must be >= 1");
    const int n = fit.n;
    const LossTriangle observed(fit.observed_cumulative, Kind::cumulative);
    double paid = 0.0;
    for (int i = 1; i <= n; ++i) paid += observed.at(i, observed.last_lag(i));

    const bool degenerate_pool = fit.scaled_residuals.empty();  // exact-ratio triangle
    Rng rng(seed);
    std::vector<ReserveOutcome> outcomes;
    outcomes.reserve(n_sims);
    SquareGrid pseudo(n);
    std::size_t failed = 0;
    for (std::size_t s = 0; s < n_sims; ++s) {
        for (;;) {
            DevFactors refit = fit.factors;
            if (!degenerate_pool) {
                // Pseudo-data must stay inside the model space (positive
                // cumulatives); resamples that leave it are redrawn.
                bool in_space = true;
                for (int i = 1; i <= n && in_space; ++i) {
                    double value = observed.at(i, 1);
                    pseudo.at(i, 1) = value;
                    for (int j = 2; j <= n - i + 1; ++j) {
                        const double sigma = std::sqrt(fit.sigma2_at(j));
                        const double e = fit.scaled_residuals[rng.index(fit.scaled_residuals.size())];
                        const double factor = fit.factors.at(j) + sigma * e / std::sqrt(value);
                        value *= factor;
                        if (!(value > 0.0)) {
                            in_space = false;
                            break;
                        }
                        pseudo.at(i, j) = value;
                    }
                }
                if (!in_space) {
                    if (++failed > 100 + 20 * n_sims)
                        throw FitDegeneracyError("mack_bootstrap: pseudo-triangles persistently degenerate");
                    continue;
                }
                try {
                    refit = dev_factors(LossTriangle(pseudo, Kind::cumulative));
                } catch (const DegenerateColumnError&) {
                    if (++failed > 100 + 20 * n_sims)
                        throw FitDegeneracyError("mack_bootstrap: pseudo-triangles persistently degenerate");
                    continue;
                }
            }
            ReserveOutcome o;
            for (int i = 2; i <= n; ++i) {
                const int lag = observed.last_lag(i);
                double value = observed.at(i, lag);
                for (int j = lag + 1; j <= n; ++j) {
                    double next = value * refit.at(j);
                    if (options.process_error) {
                        const double var = fit.sigma2_at(j) * std::abs(value);
                        if (var > 0.0) next += std::sqrt(var) * rng.normal();
                    }
                    if (j == lag + 1) o.next_year_payments += next - value;
                    value = next;
                }
                o.reserve += value - observed.at(i, lag);
            }
            o.ultimate = paid + o.reserve;
            outcomes.push_back(o);
            break;
        }
    }
    return ReserveDistribution(std::move(outcomes));
}

}  // namespace runoff
