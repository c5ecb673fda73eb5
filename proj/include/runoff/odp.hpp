#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "runoff/chain_ladder.hpp"
#include "runoff/distribution.hpp"
#include "runoff/errors.hpp"
#include "runoff/rng.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// Overdispersed-Poisson fit of the incremental triangle via the Chain Ladder
// equivalence: fitted values come from back-recursing the last diagonal
// through the development factors, which reproduces the GLM margins.
struct OdpFit {
    int n = 0;
    SquareGrid fitted_incrementals;          // upper triangle
    double dispersion = 0.0;                 // phi
    std::vector<double> adjusted_residuals;  // Pearson residuals * sqrt(cells/dof)
    DevFactors factors;
    SquareGrid observed_cumulative;          // kept for the bootstrap projection
    bool degenerate = false;                 // all residuals zero (phi = 0 boundary)
};

inline OdpFit fit_odp(const LossTriangle& triangle) {
    const LossTriangle cumulative = convert(triangle, Kind::cumulative);
    const LossTriangle incremental = convert(triangle, Kind::incremental);
    const int n = cumulative.n();

    OdpFit fit;
    fit.n = n;
    fit.factors = dev_factors(cumulative);
    fit.observed_cumulative = cumulative.cells();

    // Back-recursed fitted cumulatives, anchored at the observed diagonal.
    SquareGrid fitted_cum(n);
    for (int i = 1; i <= n; ++i) {
        const int lag = cumulative.last_lag(i);
        fitted_cum.at(i, lag) = cumulative.at(i, lag);
        for (int j = lag; j >= 2; --j) fitted_cum.at(i, j - 1) = fitted_cum.at(i, j) / fit.factors.at(j);
    }
    fit.fitted_incrementals = SquareGrid(n);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= cumulative.last_lag(i); ++j)
            fit.fitted_incrementals.at(i, j) =
                j == 1 ? fitted_cum.at(i, 1) : fitted_cum.at(i, j) - fitted_cum.at(i, j - 1);

    const int cells = n * (n + 1) / 2;
    const int dof = cells - (2 * n - 1);
    if (dof <= 0) throw StructuralError("fit_odp: too few cells for the parameter count");

    double ss = 0.0;
    std::vector<double> residuals;
    residuals.reserve(static_cast<std::size_t>(cells));
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= cumulative.last_lag(i); ++j) {
            const double m = fit.fitted_incrementals.at(i, j);
            if (!(m > 0.0))
                throw FitDegeneracyError("fit_odp: non-positive fitted incremental at (" + std::to_string(i) +
                                         "," + std::to_string(j) + ")");
            const double r = (incremental.at(i, j) - m) / std::sqrt(m);
            residuals.push_back(r);
            ss += r * r;
        }
    }
    fit.dispersion = ss / dof;

    const double adjust = std::sqrt(static_cast<double>(cells) / dof);
    // Structural zero residuals (the fit interpolates the corners exactly)
    // are dropped from the pool; if every residual is zero the fit is
    // degenerate-but-valid and the pool keeps the zeros.
    for (double r : residuals)
        if (r != 0.0) fit.adjusted_residuals.push_back(r * adjust);
    if (fit.adjusted_residuals.empty()) {
        fit.degenerate = true;
        fit.adjusted_residuals.assign(residuals.size(), 0.0);
    }
    return fit;
}

struct OdpBootstrapOptions {
    bool process_error = true;  // test hook: disable the gamma process layer
};

// England/Verrall bootstrap: resample adjusted residuals onto the fitted
// incrementals, refit, project, then draw each future increment from a gamma
// law with mean m and variance phi*m (signed gamma when m < 0).
inline ReserveDistribution odp_bootstrap(const OdpFit& fit, std::size_t n_sims, std::uint64_t seed,
                                         const OdpBootstrapOptions& options = {}) {
    if (n_sims == 0) throw ArgumentError("odp_bootstrap: n_sims must be >= 1");
    if (fit.adjusted_residuals.empty()) throw ArgumentError("odp_bootstrap: empty residual pool");
    const int n = fit.n;
    const double phi = fit.dispersion;

    const LossTriangle observed(fit.observed_cumulative, Kind::cumulative);
    double paid = 0.0;
    for (int i = 1; i <= n; ++i) paid += observed.at(i, observed.last_lag(i));

    Rng rng(seed);
    std::vector<ReserveOutcome> outcomes;
    outcomes.reserve(n_sims);
    SquareGrid pseudo(n);
    std::size_t failed_refits = 0;
    for (std::size_t s = 0; s < n_sims; ++s) {
        for (;;) {
            // Pseudo-increments from resampled residuals, then cumulate.
            for (int i = 1; i <= n; ++i) {
                double acc = 0.0;
                for (int j = 1; j <= n - i + 1; ++j) {
                    const double m = fit.fitted_incrementals.at(i, j);
                    const double r = fit.adjusted_residuals[rng.index(fit.adjusted_residuals.size())];
                    acc += m + r * std::sqrt(m);
                    pseudo.at(i, j) = acc;
                }
            }
            DevFactors refit;
            try {
                refit = dev_factors(LossTriangle(pseudo, Kind::cumulative));
            } catch (const DegenerateColumnError&) {
                if (++failed_refits > 100 + 10 * n_sims)
                    throw FitDegeneracyError("odp_bootstrap: pseudo-triangles persistently degenerate");
                continue;  // redraw
            }
            ReserveOutcome o;
            bool ok = true;
            for (int i = 2; i <= n && ok; ++i) {
                const int lag = observed.last_lag(i);
                double prev = observed.at(i, lag);
                for (int j = lag + 1; j <= n; ++j) {
                    const double next = prev * refit.at(j);
                    const double mean_inc = next - prev;
                    double inc;
                    if (!options.process_error || phi == 0.0 || mean_inc == 0.0) {
                        inc = mean_inc;
                    } else {
                        const double shape = std::abs(mean_inc) / phi;
                        if (!(shape > 0.0) || !std::isfinite(shape)) {
                            ok = false;
                            break;
                        }
                        inc = rng.gamma(shape, phi);
                        if (mean_inc < 0.0) inc = -inc;
                    }
                    o.reserve += inc;
                    if (j == lag + 1) o.next_year_payments += inc;
                    prev = next;  // process noise is per cell; the mean chain stays deterministic
                }
            }
            if (!ok) {
                if (++failed_refits > 100 + 10 * n_sims)
                    throw FitDegeneracyError("odp_bootstrap: process layer persistently degenerate");
                continue;
            }
            o.ultimate = paid + o.reserve;
            outcomes.push_back(o);
            break;
        }
    }
    return ReserveDistribution(std::move(outcomes));
}

}  // namespace runoff
