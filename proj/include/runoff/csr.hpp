#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "runoff/chain_ladder.hpp"
#include "runoff/distribution.hpp"
#include "runoff/errors.hpp"
#include "runoff/rng.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// Changing-settlement-rate parameter vector. The location of cell (i,j) is
// alpha_i + beta_j * (1-gamma)^(i-1); the scale sigma_j is the suffix sum of
// the a_i, which forces sigma_1 > sigma_2 > ... > sigma_J.
struct CsrParams {
    std::vector<double> alpha;
    std::vector<double> beta;  // beta[n-1] = 0 by construction
    std::vector<double> a;     // each in (0,1)
    double gamma = 0.0;
    double logelr = -0.4;

    int n() const { return static_cast<int>(alpha.size()); }

    std::vector<double> sigma_vector() const {
        const int size = n();
        std::vector<double> sigma(static_cast<std::size_t>(size));
        double acc = 0.0;
        for (int j = size; j >= 1; --j) {
            acc += a[static_cast<std::size_t>(j - 1)];
            sigma[static_cast<std::size_t>(j - 1)] = acc;
        }
        return sigma;
    }

    double mu(int i, int j) const {
        return alpha[static_cast<std::size_t>(i - 1)] +
               beta[static_cast<std::size_t>(j - 1)] * std::pow(1.0 - gamma, i - 1);
    }
};

struct CsrPosterior {
    std::vector<CsrParams> draws;
    std::map<std::string, double> acceptance_rates;  // per proposal block
    bool converged = true;
    std::string warning;
};

namespace detail {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log posterior with the observed-cell logs precomputed once per triangle.
class CsrEvaluator {
public:
    CsrEvaluator(const CompanyDataset& ds) : n_(ds.n()) {
        log_premiums_.resize(static_cast<std::size_t>(n_));
        for (int i = 1; i <= n_; ++i) log_premiums_[static_cast<std::size_t>(i - 1)] = std::log(ds.premiums[i - 1]);
        log_cells_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
        for (int i = 1; i <= n_; ++i) {
            for (int j = 1; i + j <= n_ + 1; ++j) {
                const double d = ds.rectangle.at(i, j);
                if (!(d > 0.0))
                    throw SupportError("csr: non-positive observed payment at (" + std::to_string(i) + "," +
                                       std::to_string(j) + ")");
                log_cells_[static_cast<std::size_t>(i - 1) * n_ + (j - 1)] = std::log(d);
            }
        }
    }

    int n() const { return n_; }

    double operator()(const CsrParams& p) const {
        if (p.n() != n_) return kNegInf;
        // Prior support.
        if (!(p.logelr >= -1.0 && p.logelr <= 0.5)) return kNegInf;
        if (p.beta[static_cast<std::size_t>(n_ - 1)] != 0.0) return kNegInf;
        for (int j = 1; j < n_; ++j) {
            const double b = p.beta[static_cast<std::size_t>(j - 1)];
            if (!(b >= -5.0 && b <= 5.0)) return kNegInf;
        }
        for (double ai : p.a)
            if (!(ai > 0.0 && ai < 1.0)) return kNegInf;

        double lp = 0.0;
        // alpha_i ~ N(ln P_i + logelr, sd sqrt(10)); gamma ~ N(0, sd 0.025);
        // logelr ~ U(-1, 0.5); beta_j ~ U(-5, 5) for j < J; a_i ~ U(0, 1).
        for (int i = 1; i <= n_; ++i) {
            const double d = p.alpha[static_cast<std::size_t>(i - 1)] -
                             log_premiums_[static_cast<std::size_t>(i - 1)] - p.logelr;
            lp += -0.5 * d * d / 10.0 - 0.5 * std::log(10.0) - kLogSqrt2Pi;
        }
        lp += -0.5 * p.gamma * p.gamma / (0.025 * 0.025) - std::log(0.025) - kLogSqrt2Pi;
        lp += -std::log(1.5);                 // logelr
        lp += -(n_ - 1) * std::log(10.0);     // beta_1..beta_{J-1}

        const std::vector<double> sigma = p.sigma_vector();
        double decay = 1.0;  // (1-gamma)^(i-1)
        for (int i = 1; i <= n_; ++i) {
            const double alpha_i = p.alpha[static_cast<std::size_t>(i - 1)];
            for (int j = 1; i + j <= n_ + 1; ++j) {
                const double s = sigma[static_cast<std::size_t>(j - 1)];
                const double mu = alpha_i + p.beta[static_cast<std::size_t>(j - 1)] * decay;
                const double logd = log_cells_[static_cast<std::size_t>(i - 1) * n_ + (j - 1)];
                const double z = (logd - mu) / s;
                lp += -logd - std::log(s) - kLogSqrt2Pi - 0.5 * z * z;
            }
            decay *= 1.0 - p.gamma;
        }
        return lp;
    }

private:
    int n_;
    std::vector<double> log_premiums_;
    std::vector<double> log_cells_;
};

}  // namespace detail

// Log density of the parameters given the observed upper triangle, including
// all priors; -inf outside the prior support.
inline double csr_log_posterior(const CsrParams& params, const CompanyDataset& ds) {
    detail::CsrEvaluator eval(ds);
    return eval(params);
}

struct CsrOptions {
    std::size_t n_draws = 10000;
    std::size_t burn_in = 5000;
    std::uint64_t seed = 0;
};

// Adaptive random-walk Metropolis-within-Gibbs. Parameters are updated one
// at a time inside four blocks (alpha | beta | gamma+logelr | a); each block
// has one step-size multiplier, tuned toward ~30% acceptance during burn-in
// by Robbins-Monro on the log step and frozen afterwards. The a_i walk on a
// logit transform, with the Jacobian folded into the acceptance ratio.
inline CsrPosterior csr_sample_posterior(const CompanyDataset& ds, const CsrOptions& options) {
    detail::CsrEvaluator eval(ds);
    const int n = eval.n();
    Rng rng(options.seed);

    CsrParams cur;
    cur.alpha.resize(static_cast<std::size_t>(n));
    cur.beta.assign(static_cast<std::size_t>(n), 0.0);
    cur.a.assign(static_cast<std::size_t>(n), 0.05);
    cur.gamma = 0.0;
    {
        double prem = 0.0;
        for (double p : ds.premiums) prem += p;
        cur.logelr = std::clamp(std::log(std::max(ds.paid_to_date(), 1e-12) / prem), -0.95, 0.45);
        for (int i = 1; i <= n; ++i)
            cur.alpha[static_cast<std::size_t>(i - 1)] = std::log(ds.premiums[i - 1]) + cur.logelr;
        // Start beta at the log of the observed payment pattern.
        try {
            const DevFactors factors = dev_factors(ds.observed_triangle());
            double cum = 1.0;
            for (int j = n; j >= 2; --j) {
                cur.beta[static_cast<std::size_t>(j - 1)] = std::clamp(std::log(cum), -4.9, 0.0);
                cum /= std::max(factors.at(j), 1e-6);
            }
            cur.beta[0] = std::clamp(std::log(cum), -4.9, 0.0);
            cur.beta[static_cast<std::size_t>(n - 1)] = 0.0;
        } catch (const Error&) {
            // keep zeros; the sampler still explores from there
        }
    }

    double cur_lp = eval(cur);
    if (!std::isfinite(cur_lp)) throw SupportError("csr: initial state outside prior support");

    enum Block { kAlpha = 0, kBeta = 1, kGammaLogelr = 2, kA = 3 };
    const char* block_names[4] = {"alpha", "beta", "gamma_logelr", "a"};
    double log_step[4] = {std::log(0.2), std::log(0.2), std::log(1.0), std::log(1.0)};
    // Per-parameter base scales; the adapted multiplier is per block.
    const double gamma_scale = 0.02, logelr_scale = 0.1, a_scale = 0.5;

    std::size_t accepted[4] = {0, 0, 0, 0};
    std::size_t proposed[4] = {0, 0, 0, 0};
    std::size_t accepted_tail[4] = {0, 0, 0, 0};
    std::size_t proposed_tail[4] = {0, 0, 0, 0};

    auto metropolis = [&](Block block, CsrParams& trial, double log_jacobian_delta, bool tail) {
        ++proposed[block];
        if (tail) ++proposed_tail[block];
        const double lp = eval(trial);
        const double log_ratio = lp - cur_lp + log_jacobian_delta;
        if (std::isfinite(lp) && (log_ratio >= 0.0 || std::log(rng.uniform_pos()) < log_ratio)) {
            cur = trial;
            cur_lp = lp;
            ++accepted[block];
            if (tail) ++accepted_tail[block];
        }
    };

    const std::size_t total_sweeps = options.burn_in + options.n_draws;
    CsrPosterior posterior;
    posterior.draws.reserve(options.n_draws);

    for (std::size_t sweep = 0; sweep < total_sweeps; ++sweep) {
        const bool tail = sweep >= options.burn_in;
        std::size_t sweep_accepted[4] = {0, 0, 0, 0};
        std::size_t sweep_proposed[4] = {0, 0, 0, 0};
        auto tally = [&](Block b, std::size_t before) {
            ++sweep_proposed[b];
            if (accepted[b] > before) ++sweep_accepted[b];
        };

        const double s_alpha = std::exp(log_step[kAlpha]);
        for (int i = 1; i <= n; ++i) {
            CsrParams trial = cur;
            trial.alpha[static_cast<std::size_t>(i - 1)] += s_alpha * rng.normal();
            const std::size_t before = accepted[kAlpha];
            metropolis(kAlpha, trial, 0.0, tail);
            tally(kAlpha, before);
        }

        const double s_beta = std::exp(log_step[kBeta]);
        for (int j = 1; j <= n - 1; ++j) {
            CsrParams trial = cur;
            trial.beta[static_cast<std::size_t>(j - 1)] += s_beta * rng.normal();
            const std::size_t before = accepted[kBeta];
            metropolis(kBeta, trial, 0.0, tail);
            tally(kBeta, before);
        }

        const double s_gl = std::exp(log_step[kGammaLogelr]);
        {
            CsrParams trial = cur;
            trial.gamma += s_gl * gamma_scale * rng.normal();
            const std::size_t before = accepted[kGammaLogelr];
            metropolis(kGammaLogelr, trial, 0.0, tail);
            tally(kGammaLogelr, before);
        }
        {
            CsrParams trial = cur;
            trial.logelr += s_gl * logelr_scale * rng.normal();
            const std::size_t before = accepted[kGammaLogelr];
            metropolis(kGammaLogelr, trial, 0.0, tail);
            tally(kGammaLogelr, before);
        }

        const double s_a = std::exp(log_step[kA]);
        for (int i = 1; i <= n; ++i) {
            CsrParams trial = cur;
            const double a_cur = cur.a[static_cast<std::size_t>(i - 1)];
            const double t_new = std::log(a_cur / (1.0 - a_cur)) + s_a * a_scale * rng.normal();
            const double a_new = 1.0 / (1.0 + std::exp(-t_new));
            if (!(a_new > 0.0 && a_new < 1.0)) {
                ++proposed[kA];
                if (tail) ++proposed_tail[kA];
                ++sweep_proposed[kA];
                continue;  // underflow at the boundary: reject
            }
            trial.a[static_cast<std::size_t>(i - 1)] = a_new;
            const double jac = std::log(a_new * (1.0 - a_new)) - std::log(a_cur * (1.0 - a_cur));
            const std::size_t before = accepted[kA];
            metropolis(kA, trial, jac, tail);
            tally(kA, before);
        }

        if (!tail) {
            const double rate_target = 0.30;
            const double gain = std::pow(static_cast<double>(sweep + 1), -0.6);
            for (int b = 0; b < 4; ++b) {
                if (sweep_proposed[b] == 0) continue;
                const double rate =
                    static_cast<double>(sweep_accepted[b]) / static_cast<double>(sweep_proposed[b]);
                log_step[b] = std::clamp(log_step[b] + gain * (rate - rate_target), -8.0, 3.0);
            }
        } else {
            posterior.draws.push_back(cur);
        }
    }

    for (int b = 0; b < 4; ++b) {
        const double rate = proposed_tail[b] == 0
                                ? 0.0
                                : static_cast<double>(accepted_tail[b]) / static_cast<double>(proposed_tail[b]);
        posterior.acceptance_rates[block_names[b]] = rate;
        if (rate < 0.02) {
            posterior.converged = false;
            posterior.warning += std::string(posterior.warning.empty() ? "" : "; ") + "block " +
                                 block_names[b] + " acceptance " + std::to_string(rate);
        }
    }
    return posterior;
}

// Mean simulated scaled cumulative payment per cell over the posterior
// draws, on the full rectangle. Upper cells feed level-2 training, lower
// cells level-2 prediction.
inline SquareGrid csr_feature(const CsrPosterior& posterior, const CompanyDataset& ds, std::uint64_t seed) {
    if (posterior.draws.empty()) throw ArgumentError("csr_feature: empty posterior");
    const int n = ds.n();
    Rng rng(seed);
    SquareGrid acc(n, 0.0);
    for (const CsrParams& p : posterior.draws) {
        const std::vector<double> sigma = p.sigma_vector();
        double decay = 1.0;
        for (int i = 1; i <= n; ++i) {
            const double alpha_i = p.alpha[static_cast<std::size_t>(i - 1)];
            for (int j = 1; j <= n; ++j) {
                const double mu = alpha_i + p.beta[static_cast<std::size_t>(j - 1)] * decay;
                acc.at(i, j) += std::exp(mu + sigma[static_cast<std::size_t>(j - 1)] * rng.normal());
            }
            decay *= 1.0 - p.gamma;
        }
    }
    const double k = static_cast<double>(posterior.draws.size());
    SquareGrid feature(n, 0.0);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) feature.at(i, j) = acc.at(i, j) / k / ds.premiums[i - 1];
    return feature;
}

// Posterior-predictive reserve distribution: one simulated lower rectangle
// (and outcome triple) per retained draw.
inline ReserveDistribution csr_reserve_distribution(const CsrPosterior& posterior, const CompanyDataset& ds,
                                                    std::uint64_t seed) {
    if (posterior.draws.empty()) throw ArgumentError("csr_reserve_distribution: empty posterior");
    const int n = ds.n();
    Rng rng(seed);
    std::vector<ReserveOutcome> outcomes;
    outcomes.reserve(posterior.draws.size());
    for (const CsrParams& p : posterior.draws) {
        const std::vector<double> sigma = p.sigma_vector();
        ReserveOutcome o;
        o.ultimate = ds.rectangle.at(1, n);  // first row is fully developed
        double decay = 1.0 - p.gamma;
        for (int i = 2; i <= n; ++i) {
            const double alpha_i = p.alpha[static_cast<std::size_t>(i - 1)];
            const int lag = ds.last_lag(i);
            const double paid = ds.rectangle.at(i, lag);
            for (int j = lag + 1; j <= n; ++j) {
                const double mu = alpha_i + p.beta[static_cast<std::size_t>(j - 1)] * decay;
                const double cell = std::exp(mu + sigma[static_cast<std::size_t>(j - 1)] * rng.normal());
                if (j == lag + 1) o.next_year_payments += cell - paid;
                if (j == n) {
                    o.reserve += cell - paid;
                    o.ultimate += cell;
                }
            }
            decay *= 1.0 - p.gamma;
        }
        outcomes.push_back(o);
    }
    return ReserveDistribution(std::move(outcomes));
}

// Posterior means used in reporting: alpha, beta, gamma, and the sigma_j.
struct CsrMeans {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> sigma;
    double gamma = 0.0;
    double logelr = 0.0;
};

inline CsrMeans csr_posterior_means(const CsrPosterior& posterior) {
    if (posterior.draws.empty()) throw ArgumentError("csr_posterior_means: empty posterior");
    const int n = posterior.draws.front().n();
    CsrMeans m;
    m.alpha.assign(static_cast<std::size_t>(n), 0.0);
    m.beta.assign(static_cast<std::size_t>(n), 0.0);
    m.sigma.assign(static_cast<std::size_t>(n), 0.0);
    for (const CsrParams& p : posterior.draws) {
        const std::vector<double> sigma = p.sigma_vector();
        for (int k = 0; k < n; ++k) {
            m.alpha[static_cast<std::size_t>(k)] += p.alpha[static_cast<std::size_t>(k)];
            m.beta[static_cast<std::size_t>(k)] += p.beta[static_cast<std::size_t>(k)];
            m.sigma[static_cast<std::size_t>(k)] += sigma[static_cast<std::size_t>(k)];
        }
        m.gamma += p.gamma;
        m.logelr += p.logelr;
    }
    const double k = static_cast<double>(posterior.draws.size());
    for (int i = 0; i < n; ++i) {
        m.alpha[static_cast<std::size_t>(i)] /= k;
        m.beta[static_cast<std::size_t>(i)] /= k;
        m.sigma[static_cast<std::size_t>(i)] /= k;
    }
    m.gamma /= k;
    m.logelr /= k;
    return m;
}

}  // namespace runoff
