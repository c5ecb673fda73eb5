#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "runoff/errors.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// 100 * RMSE(predictions) / sum(actuals), the error weight over the total.
inline double pct_rmse(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    if (predictions.empty() || predictions.size() != actuals.size())
        throw ArgumentError("pct_rmse: need K >= 1 predictions with matching actuals");
    double ss = 0.0, total = 0.0;
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        const double d = predictions[k] - actuals[k];
        ss += d * d;
        total += actuals[k];
    }
    if (total == 0.0) throw NormalizationError("pct_rmse: actuals sum to zero");
    return 100.0 * std::sqrt(ss / static_cast<double>(predictions.size())) / total;
}

// Per-model summary for one company.
struct ModelOutputs {
    double point_reserve = 0.0;
    double point_next_year = 0.0;
    double point_ultimate = 0.0;
    double dist_mean_reserve = 0.0;
    double dist_sd_reserve = 0.0;
    double dist_p995_reserve = 0.0;
    bool exceeded = false;  // actual reserve strictly above the 99.5th percentile
};

struct CompanyResult {
    std::string group_id;
    Line line = Line::CA;
    Actuals actuals;
    std::map<std::string, ModelOutputs> models;
    std::map<std::string, std::string> failures;  // model -> reason, for legs that errored
};

// Mean relative exceedance of the 99.5th percentile over the central reserve.
inline double ratio_rr(const std::vector<CompanyResult>& results, const std::string& model) {
    if (results.empty()) throw ArgumentError("ratio_rr: no results");
    double sum = 0.0;
    for (const auto& r : results) {
        const ModelOutputs& m = r.models.at(model);
        if (m.dist_mean_reserve == 0.0)
            throw RatioUndefinedError("ratio_rr: zero mean reserve for company " + r.group_id);
        sum += (m.dist_p995_reserve - m.dist_mean_reserve) / m.dist_mean_reserve;
    }
    return sum / static_cast<double>(results.size());
}

// Mean standard deviation per unit of reserve.
inline double ratio_sigma(const std::vector<CompanyResult>& results, const std::string& model) {
    if (results.empty()) throw ArgumentError("ratio_sigma: no results");
    double sum = 0.0;
    for (const auto& r : results) {
        const ModelOutputs& m = r.models.at(model);
        if (m.dist_mean_reserve == 0.0)
            throw RatioUndefinedError("ratio_sigma: zero mean reserve for company " + r.group_id);
        sum += m.dist_sd_reserve / m.dist_mean_reserve;
    }
    return sum / static_cast<double>(results.size());
}

// Upper tail of the chi-square(1) law via the complementary error function.
inline double chi2_1_sf(double x) {
    if (x <= 0.0) return 1.0;
    return std::erfc(std::sqrt(0.5 * x));
}

// Kupiec proportion-of-failures likelihood ratio test: x exceedances out of
// K trials against nominal probability p, with 0*log(0) = 0.
inline double kupiec_test(std::size_t exceedances, std::size_t trials, double p = 0.005) {
    if (trials == 0) throw ArgumentError("kupiec_test: K must be >= 1");
    if (exceedances > trials) throw ArgumentError("kupiec_test: x > K");
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("kupiec_test: p outside (0,1)");
    const double x = static_cast<double>(exceedances);
    const double k = static_cast<double>(trials);
    auto xlogy = [](double a, double y) { return a == 0.0 ? 0.0 : a * std::log(y); };
    const double log_null = xlogy(k - x, 1.0 - p) + xlogy(x, p);
    const double rate = x / k;
    const double log_alt = xlogy(k - x, 1.0 - rate) + xlogy(x, rate);
    const double lr = -2.0 * log_null + 2.0 * log_alt;
    return chi2_1_sf(lr);
}

struct LineModelMetrics {
    double pct_rmse_reserve = 0.0;
    double pct_rmse_next_year = 0.0;
    double pct_rmse_ultimate = 0.0;
    double ratio_rr = 0.0;
    double ratio_sigma = 0.0;
    double kupiec_p = 0.0;
    std::size_t exceedances = 0;
    std::size_t k = 0;  // companies aggregated
};

struct EvaluationReport {
    // (line, model) -> metrics. Only companies where the model succeeded count.
    std::map<Line, std::map<std::string, LineModelMetrics>> lines;
    std::map<Line, std::size_t> companies_per_line;
};

inline EvaluationReport build_report(const std::vector<CompanyResult>& results,
                                     const std::vector<std::string>& models, double alpha = 0.005) {
    EvaluationReport report;
    for (Line line : all_lines()) {
        std::vector<CompanyResult> of_line;
        for (const auto& r : results)
            if (r.line == line) of_line.push_back(r);
        if (of_line.empty()) continue;
        report.companies_per_line[line] = of_line.size();
        for (const auto& model : models) {
            std::vector<CompanyResult> ok;
            for (const auto& r : of_line)
                if (r.models.count(model)) ok.push_back(r);
            if (ok.empty()) continue;
            LineModelMetrics m;
            m.k = ok.size();
            std::vector<double> pr, ar, pp, ap, pu, au;
            for (const auto& r : ok) {
                const ModelOutputs& o = r.models.at(model);
                pr.push_back(o.point_reserve);
                ar.push_back(r.actuals.reserve);
                pp.push_back(o.point_next_year);
                ap.push_back(r.actuals.next_year_payments);
                pu.push_back(o.point_ultimate);
                au.push_back(r.actuals.ultimate);
                if (o.exceeded) ++m.exceedances;
            }
            m.pct_rmse_reserve = pct_rmse(pr, ar);
            m.pct_rmse_next_year = pct_rmse(pp, ap);
            m.pct_rmse_ultimate = pct_rmse(pu, au);
            m.ratio_rr = ratio_rr(ok, model);
            m.ratio_sigma = ratio_sigma(ok, model);
            m.kupiec_p = kupiec_test(m.exceedances, m.k, alpha);
            report.lines[line][model] = m;
        }
    }
    return report;
}

}  // namespace runoff
