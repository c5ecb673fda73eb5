#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "runoff/distribution.hpp"
#include "runoff/errors.hpp"
#include "runoff/rng.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// The moment inversion has two variants: `standard` solves the log-normal
// mean/variance system exactly, `printed` divides the variance by the mean
// instead of its square (kept for comparison runs).
enum class Eq17Variant { standard, printed };

inline Eq17Variant parse_eq17_variant(const std::string& s) {
    if (s == "standard") return Eq17Variant::standard;
    if (s == "printed") return Eq17Variant::printed;
    throw ArgumentError("unknown variant '" + s + "': expected standard|printed");
}

struct DevYearMoments {
    std::vector<double> mean;      // E_j over accident years, 1-based via index j-1
    std::vector<double> variance;  // unbiased (n-1 denominator)
};

// Column-wise moments of a completed scaled rectangle, over all n accident years.
inline DevYearMoments dev_year_moments(const SquareGrid& rect) {
    const int n = rect.n();
    if (n < 2) throw StructuralError("dev_year_moments: need n >= 2");
    DevYearMoments out;
    out.mean.resize(static_cast<std::size_t>(n));
    out.variance.resize(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
        double s = 0.0;
        for (int i = 1; i <= n; ++i) s += rect.at(i, j);
        const double m = s / n;
        double ss = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double d = rect.at(i, j) - m;
            ss += d * d;
        }
        out.mean[static_cast<std::size_t>(j - 1)] = m;
        out.variance[static_cast<std::size_t>(j - 1)] = ss / (n - 1);
    }
    return out;
}

// Per-development-year log-normal parameters; the location is shared by all
// accident years within a development year.
struct LognormalParams {
    std::vector<double> mu;      // per development year, index j-1
    std::vector<double> sigma2;  // per development year, index j-1

    int n() const { return static_cast<int>(mu.size()); }
    double mu_at(int j) const { return mu[static_cast<std::size_t>(j - 1)]; }
    double sigma2_at(int j) const { return sigma2[static_cast<std::size_t>(j - 1)]; }
};

inline LognormalParams moment_match(const DevYearMoments& moments,
                                    Eq17Variant variant = Eq17Variant::standard) {
    LognormalParams p;
    const std::size_t n = moments.mean.size();
    p.mu.resize(n);
    p.sigma2.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double e = moments.mean[k];
        const double v = moments.variance[k];
        if (!(e > 0.0))
            throw SupportError("moment_match: non-positive mean at development year " + std::to_string(k + 1));
        p.mu[k] = std::log(e * e / std::sqrt(v + e * e));
        p.sigma2[k] = variant == Eq17Variant::standard ? std::log(1.0 + v / (e * e))
                                                       : std::log(1.0 + v / e);
    }
    return p;
}

// Draws T rectangles of scaled cumulative payments cell-wise from the fitted
// log-normal law, removes the premium scaling, and reduces each to a reserve
// outcome against the dataset's observed diagonal.
inline ReserveDistribution simulate_lognormal(const LognormalParams& params, const CompanyDataset& ds,
                                              std::size_t t_sims, std::uint64_t seed) {
    if (t_sims == 0) throw ArgumentError("simulate_lognormal: T must be >= 1");
    const int n = ds.n();
    if (params.n() != n) throw ArgumentError("simulate_lognormal: parameter length != n");
    Rng rng(seed);
    std::vector<ReserveOutcome> outcomes;
    outcomes.reserve(t_sims);
    std::vector<double> sigma(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) sigma[static_cast<std::size_t>(j - 1)] = std::sqrt(params.sigma2_at(j));
    for (std::size_t t = 0; t < t_sims; ++t) {
        ReserveOutcome o;
        for (int i = 1; i <= n; ++i) {
            const double premium = ds.premiums[static_cast<std::size_t>(i - 1)];
            const int lag = ds.last_lag(i);
            const double paid = ds.rectangle.at(i, lag);
            double next_cell = 0.0, final_cell = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double cell = rng.lognormal(params.mu_at(j), sigma[static_cast<std::size_t>(j - 1)]);
                if (j == lag + 1) next_cell = cell;
                if (j == n) final_cell = cell;
            }
            o.reserve += premium * final_cell - paid;
            o.ultimate += premium * final_cell;
            if (lag < n) o.next_year_payments += premium * next_cell - paid;
        }
        outcomes.push_back(o);
    }
    return ReserveDistribution(std::move(outcomes));
}

// Convenience: completed scaled rectangle -> reserve distribution.
inline ReserveDistribution lognormal_reserve_distribution(const SquareGrid& scaled_rect,
                                                          const CompanyDataset& ds, std::size_t t_sims,
                                                          std::uint64_t seed,
                                                          Eq17Variant variant = Eq17Variant::standard) {
    return simulate_lognormal(moment_match(dev_year_moments(scaled_rect), variant), ds, t_sims, seed);
}

}  // namespace runoff
