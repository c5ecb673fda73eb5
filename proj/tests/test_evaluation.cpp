#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "runoff/distribution.hpp"
#include "runoff/evaluation.hpp"
#include "runoff/rng.hpp"

using namespace runoff;

namespace {

// Independent chi-square(1) upper tail via Simpson quadrature of the density,
// used as the oracle for the closed-form implementation.
double chi2_1_sf_quadrature(double lr) {
    if (lr <= 0.0) return 1.0;
    auto density = [](double x) {
        return std::exp(-0.5 * x) / (std::sqrt(2.0 * 3.14159265358979323846 * x));
    };
    // Integrate from lr to lr + 80 with fine Simpson panels.
    const int panels = 200000;
    const double width = 80.0;
    const double h = width / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a = lr + k * h;
        const double b = a + h;
        acc += (density(a) + 4.0 * density(0.5 * (a + b)) + density(b)) * h / 6.0;
    }
    return acc;
}

CompanyResult result_with(const std::string& model, double mean, double sd, double p995) {
    CompanyResult r;
    r.group_id = "g";
    ModelOutputs m;
    m.dist_mean_reserve = mean;
    m.dist_sd_reserve = sd;
    m.dist_p995_reserve = p995;
    r.models[model] = m;
    return r;
}

}  // namespace

TEST_CASE("pct_rmse: perfect predictions and the 5% hand case") {
    CHECK(pct_rmse({100, 100}, {100, 100}) == Catch::Approx(0.0));
    CHECK(pct_rmse({110, 90}, {100, 100}) == Catch::Approx(5.0));  // 100*sqrt(200/2)/200
}

TEST_CASE("pct_rmse is scale invariant") {
    const std::vector<double> p{110, 95, 130}, a{100, 100, 120};
    const double base = pct_rmse(p, a);
    std::vector<double> p2 = p, a2 = a;
    for (double& x : p2) x *= 7.5;
    for (double& x : a2) x *= 7.5;
    CHECK(pct_rmse(p2, a2) == Catch::Approx(base));
}

TEST_CASE("pct_rmse rejects zero-sum actuals") {
    CHECK_THROWS_AS(pct_rmse({1.0}, {0.0}), NormalizationError);
}

TEST_CASE("risk ratios vanish for degenerate distributions") {
    const std::vector<CompanyResult> rs{result_with("m", 50.0, 0.0, 50.0)};
    CHECK(ratio_rr(rs, "m") == Catch::Approx(0.0));
    CHECK(ratio_sigma(rs, "m") == Catch::Approx(0.0));
}

TEST_CASE("risk ratios match the log-normal closed forms") {
    // Reserves ~ LN(0,1): quantile/mean/sd have closed forms.
    Rng rng(20240301);
    std::vector<ReserveOutcome> outcomes;
    const std::size_t n = 400000;
    outcomes.reserve(n);
    for (std::size_t k = 0; k < n; ++k) outcomes.push_back({rng.lognormal(0.0, 1.0), 0.0, 0.0});
    const ReserveDistribution dist(std::move(outcomes));

    CompanyResult r;
    r.group_id = "ln";
    ModelOutputs m;
    m.dist_mean_reserve = dist.mean_reserve();
    m.dist_sd_reserve = dist.sd_reserve();
    m.dist_p995_reserve = dist.percentile_reserve(0.995);
    r.models["m"] = m;
    const std::vector<CompanyResult> rs{r};

    const double z995 = 2.5758293035489004;  // standard normal 99.5% quantile
    const double expected_rr = (std::exp(z995) - std::exp(0.5)) / std::exp(0.5);
    const double expected_sigma = std::sqrt(std::exp(1.0) - 1.0);
    CHECK(ratio_rr(rs, "m") == Catch::Approx(expected_rr).epsilon(0.03));
    CHECK(ratio_sigma(rs, "m") == Catch::Approx(expected_sigma).epsilon(0.02));
}

TEST_CASE("risk ratios are invariant to monetary rescaling") {
    const std::vector<CompanyResult> rs{result_with("m", 100.0, 20.0, 160.0)};
    const std::vector<CompanyResult> scaled{result_with("m", 300.0, 60.0, 480.0)};
    CHECK(ratio_rr(scaled, "m") == Catch::Approx(ratio_rr(rs, "m")));
    CHECK(ratio_sigma(scaled, "m") == Catch::Approx(ratio_sigma(rs, "m")));
}

TEST_CASE("ratio errors name the company with a zero mean") {
    const std::vector<CompanyResult> rs{result_with("m", 0.0, 1.0, 1.0)};
    try {
        ratio_rr(rs, "m");
        FAIL("expected RatioUndefinedError");
    } catch (const RatioUndefinedError& e) {
        CHECK(std::string(e.what()).find("g") != std::string::npos);
    }
}

TEST_CASE("kupiec: perfect calibration gives p-value one") {
    // x/K = p exactly: K=200, p=0.005 -> x=1.
    CHECK(kupiec_test(1, 200, 0.005) == Catch::Approx(1.0));
}

TEST_CASE("kupiec closed form at x=0, K=50 against the quadrature oracle") {
    const double lr = -2.0 * 50.0 * std::log(0.995);
    CHECK(lr == Catch::Approx(0.5013).margin(5e-4));
    const double oracle = chi2_1_sf_quadrature(lr);
    const double p = kupiec_test(0, 50, 0.005);
    CHECK(p == Catch::Approx(oracle).margin(1e-4));
    CHECK(p == Catch::Approx(0.479).margin(1e-3));
}

TEST_CASE("kupiec p-value is unimodal in the exceedance count") {
    // K*p below one: maximal at x=0, then decreasing.
    double prev = kupiec_test(0, 50, 0.005);
    for (std::size_t x = 1; x <= 50; ++x) {
        const double cur = kupiec_test(x, 50, 0.005);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
    // K*p = 5: increases up to x=5, then decreases.
    for (std::size_t x = 1; x <= 5; ++x)
        CHECK(kupiec_test(x, 1000, 0.005) >= kupiec_test(x - 1, 1000, 0.005) - 1e-12);
    CHECK(kupiec_test(5, 1000, 0.005) == Catch::Approx(1.0));
    for (std::size_t x = 6; x <= 30; ++x)
        CHECK(kupiec_test(x, 1000, 0.005) <= kupiec_test(x - 1, 1000, 0.005) + 1e-12);
}

TEST_CASE("report aggregation counts exceedances per line and model") {
    std::vector<CompanyResult> rs;
    for (int k = 0; k < 4; ++k) {
        CompanyResult r;
        r.group_id = "g" + std::to_string(k);
        r.line = Line::WC;
        r.actuals = {100.0, 10.0, 500.0};
        ModelOutputs m;
        m.point_reserve = 100.0 + k;
        m.point_next_year = 10.0;
        m.point_ultimate = 500.0;
        m.dist_mean_reserve = 100.0;
        m.dist_sd_reserve = 5.0;
        m.dist_p995_reserve = k == 0 ? 99.0 : 120.0;  // one exceedance
        m.exceeded = r.actuals.reserve > m.dist_p995_reserve;
        r.models["m"] = m;
        rs.push_back(r);
    }
    const EvaluationReport rep = build_report(rs, {"m"});
    const LineModelMetrics& m = rep.lines.at(Line::WC).at("m");
    CHECK(m.k == 4);
    CHECK(m.exceedances == 1);
    CHECK(m.kupiec_p == Catch::Approx(kupiec_test(1, 4, 0.005)));
    CHECK(m.pct_rmse_reserve > 0.0);
}
