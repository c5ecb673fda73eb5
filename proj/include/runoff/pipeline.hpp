#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "runoff/boosting.hpp"
#include "runoff/chain_ladder.hpp"
#include "runoff/csr.hpp"
#include "runoff/errors.hpp"
#include "runoff/evaluation.hpp"
#include "runoff/forest.hpp"
#include "runoff/grid_search.hpp"
#include "runoff/lognormal.hpp"
#include "runoff/mack.hpp"
#include "runoff/neural_net.hpp"
#include "runoff/odp.hpp"
#include "runoff/rng.hpp"
#include "runoff/schedule_p.hpp"
#include "runoff/stacking.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

using json = nlohmann::json;

struct RunConfig {
    std::map<Line, std::string> data_paths;
    std::string selection_path;
    std::map<Line, ColumnMap> columns;  // filled with per-line defaults

    std::vector<int> grid_obs_rf = {1, 2, 3, 4, 5};
    std::vector<int> grid_n_features = {1, 2};
    std::vector<int> grid_obs_gb = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> grid_theta = {0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30};

    int rf_trees = 500;
    int gb_trees = 500;
    double gb_subsample = 0.5;
    std::size_t bootstrap_sims = 10000;
    std::size_t mcmc_draws = 10000;
    std::size_t mcmc_burn_in = 5000;
    std::size_t lognormal_sims = 10000;
    int ann_epochs = 10000;
    double ann_learning_rate = 0.01;
    int ann_depth = 2;
    int ann_width = 5;

    std::vector<int> sensitivity_depths;  // extra stacked legs; empty for plain runs

    std::uint64_t seed = 20230415;
    std::string output_dir = "out";
    int jobs = 1;
    Eq17Variant eq17 = Eq17Variant::standard;
    std::vector<Line> lines = all_lines();
    int limit = 0;  // first K triangles per line; 0 = all

    void validate() const {
        if (rf_trees < 1 || gb_trees < 1) throw ArgumentError("config: tree counts must be positive");
        if (bootstrap_sims == 0 || mcmc_draws == 0 || lognormal_sims == 0 || ann_epochs < 1)
            throw ArgumentError("config: simulation and epoch counts must be positive");
        if (ann_depth < 1 || ann_depth > 3) throw ArgumentError("config: depth must be 1, 2 or 3");
        for (int d : sensitivity_depths)
            if (d < 1 || d > 3) throw ArgumentError("config: sensitivity depth must be 1, 2 or 3");
        if (jobs < 1) throw ArgumentError("config: jobs must be >= 1");
        if (limit < 0) throw ArgumentError("config: limit must be >= 0");
        if (grid_obs_rf.empty() || grid_n_features.empty() || grid_obs_gb.empty() || grid_theta.empty())
            throw ArgumentError("config: hyperparameter grids must be non-empty");
    }
};

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
    RunConfig cfg;
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).lexically_normal().string();
    };
    if (j.contains("data"))
        for (auto& [key, value] : j.at("data").items())
            cfg.data_paths[parse_line(key)] = resolve(value.get<std::string>());
    if (j.contains("selection")) cfg.selection_path = resolve(j.at("selection").get<std::string>());
    for (Line line : all_lines()) cfg.columns[line] = ColumnMap::defaults_for(line);
    if (j.contains("columns")) {
        for (auto& [key, value] : j.at("columns").items()) {
            ColumnMap& m = cfg.columns[parse_line(key)];
            if (value.contains("group")) m.group = value.at("group").get<std::string>();
            if (value.contains("accident_year")) m.accident_year = value.at("accident_year").get<std::string>();
            if (value.contains("development_lag"))
                m.development_lag = value.at("development_lag").get<std::string>();
            if (value.contains("cumulative_paid"))
                m.cumulative_paid = value.at("cumulative_paid").get<std::string>();
            if (value.contains("premium_net")) m.premium_net = value.at("premium_net").get<std::string>();
        }
    }
    if (j.contains("grids")) {
        const json& g = j.at("grids");
        if (g.contains("obs_rf")) cfg.grid_obs_rf = g.at("obs_rf").get<std::vector<int>>();
        if (g.contains("n_features")) cfg.grid_n_features = g.at("n_features").get<std::vector<int>>();
        if (g.contains("obs_gb")) cfg.grid_obs_gb = g.at("obs_gb").get<std::vector<int>>();
        if (g.contains("theta")) cfg.grid_theta = g.at("theta").get<std::vector<double>>();
    }
    if (j.contains("counts")) {
        const json& c = j.at("counts");
        if (c.contains("rf_trees")) cfg.rf_trees = c.at("rf_trees").get<int>();
        if (c.contains("gb_trees")) cfg.gb_trees = c.at("gb_trees").get<int>();
        if (c.contains("bootstrap_sims")) cfg.bootstrap_sims = c.at("bootstrap_sims").get<std::size_t>();
        if (c.contains("mcmc_draws")) cfg.mcmc_draws = c.at("mcmc_draws").get<std::size_t>();
        if (c.contains("mcmc_burn_in")) cfg.mcmc_burn_in = c.at("mcmc_burn_in").get<std::size_t>();
        if (c.contains("lognormal_sims")) cfg.lognormal_sims = c.at("lognormal_sims").get<std::size_t>();
        if (c.contains("ann_epochs")) cfg.ann_epochs = c.at("ann_epochs").get<int>();
    }
    if (j.contains("gb_subsample")) cfg.gb_subsample = j.at("gb_subsample").get<double>();
    if (j.contains("ann_depth")) cfg.ann_depth = j.at("ann_depth").get<int>();
    if (j.contains("ann_learning_rate")) cfg.ann_learning_rate = j.at("ann_learning_rate").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (j.contains("eq17_variant")) cfg.eq17 = parse_eq17_variant(j.at("eq17_variant").get<std::string>());
    if (j.contains("lines")) {
        cfg.lines.clear();
        for (const auto& s : j.at("lines")) cfg.lines.push_back(parse_line(s.get<std::string>()));
    }
    if (j.contains("limit")) cfg.limit = j.at("limit").get<int>();
    return cfg;
}

// Everything recorded per company; serialises to per_company/<line>_<group>.json
// and is sufficient to re-aggregate the full report.
struct CompanyArtifact {
    std::string group;
    Line line = Line::CA;
    Actuals actuals;
    std::map<std::string, ModelOutputs> models;
    std::map<std::string, std::string> failures;
    std::vector<double> dev_factors;  // scaled-triangle factors, lambda[0] = 1 convention

    bool hyper_valid = false;
    double obs_rf = 0.0, n_features = 0.0, obs_gb = 0.0, theta_level1 = 0.0, theta_level2 = 0.0;

    bool csr_valid = false;
    CsrMeans csr_means;
    std::map<std::string, double> csr_acceptance;
    bool csr_converged = true;

    std::map<int, ModelOutputs> sensitivity;  // depth -> stacked leg
};

namespace detail {

inline json model_outputs_to_json(const ModelOutputs& m) {
    return json{{"point", {{"reserve", m.point_reserve},
                           {"next_year", m.point_next_year},
                           {"ultimate", m.point_ultimate}}},
                {"dist", {{"mean_reserve", m.dist_mean_reserve},
                          {"sd_reserve", m.dist_sd_reserve},
                          {"p995_reserve", m.dist_p995_reserve}}},
                {"exceeded", m.exceeded}};
}

inline ModelOutputs model_outputs_from_json(const json& j) {
    ModelOutputs m;
    m.point_reserve = j.at("point").at("reserve").get<double>();
    m.point_next_year = j.at("point").at("next_year").get<double>();
    m.point_ultimate = j.at("point").at("ultimate").get<double>();
    m.dist_mean_reserve = j.at("dist").at("mean_reserve").get<double>();
    m.dist_sd_reserve = j.at("dist").at("sd_reserve").get<double>();
    m.dist_p995_reserve = j.at("dist").at("p995_reserve").get<double>();
    m.exceeded = j.at("exceeded").get<bool>();
    return m;
}

}  // namespace detail

inline json artifact_to_json(const CompanyArtifact& a) {
    json j;
    j["group"] = a.group;
    j["line"] = line_name(a.line);
    j["actuals"] = {{"reserve", a.actuals.reserve},
                    {"next_year", a.actuals.next_year_payments},
                    {"ultimate", a.actuals.ultimate}};
    json models = json::object();
    for (const auto& [name, m] : a.models) models[name] = detail::model_outputs_to_json(m);
    j["models"] = models;
    j["failures"] = a.failures;
    j["dev_factors"] = a.dev_factors;
    if (a.hyper_valid)
        j["hyperparameters"] = {{"obs_rf", a.obs_rf},
                                {"n_features", a.n_features},
                                {"obs_gb", a.obs_gb},
                                {"theta_level1", a.theta_level1},
                                {"theta_level2", a.theta_level2}};
    if (a.csr_valid)
        j["csr"] = {{"gamma", a.csr_means.gamma},   {"logelr", a.csr_means.logelr},
                    {"alpha", a.csr_means.alpha},   {"beta", a.csr_means.beta},
                    {"sigma", a.csr_means.sigma},   {"acceptance", a.csr_acceptance},
                    {"converged", a.csr_converged}};
    if (!a.sensitivity.empty()) {
        json s = json::object();
        for (const auto& [depth, m] : a.sensitivity)
            s[std::to_string(depth)] = detail::model_outputs_to_json(m);
        j["sensitivity"] = s;
    }
    return j;
}

inline CompanyArtifact artifact_from_json(const json& j) {
    CompanyArtifact a;
    a.group = j.at("group").get<std::string>();
    a.line = parse_line(j.at("line").get<std::string>());
    a.actuals.reserve = j.at("actuals").at("reserve").get<double>();
    a.actuals.next_year_payments = j.at("actuals").at("next_year").get<double>();
    a.actuals.ultimate = j.at("actuals").at("ultimate").get<double>();
    for (auto& [name, m] : j.at("models").items()) a.models[name] = detail::model_outputs_from_json(m);
    a.failures = j.at("failures").get<std::map<std::string, std::string>>();
    a.dev_factors = j.at("dev_factors").get<std::vector<double>>();
    if (j.contains("hyperparameters")) {
        a.hyper_valid = true;
        a.obs_rf = j.at("hyperparameters").at("obs_rf").get<double>();
        a.n_features = j.at("hyperparameters").at("n_features").get<double>();
        a.obs_gb = j.at("hyperparameters").at("obs_gb").get<double>();
        a.theta_level1 = j.at("hyperparameters").at("theta_level1").get<double>();
        a.theta_level2 = j.at("hyperparameters").at("theta_level2").get<double>();
    }
    if (j.contains("csr")) {
        a.csr_valid = true;
        a.csr_means.gamma = j.at("csr").at("gamma").get<double>();
        a.csr_means.logelr = j.at("csr").at("logelr").get<double>();
        a.csr_means.alpha = j.at("csr").at("alpha").get<std::vector<double>>();
        a.csr_means.beta = j.at("csr").at("beta").get<std::vector<double>>();
        a.csr_means.sigma = j.at("csr").at("sigma").get<std::vector<double>>();
        a.csr_acceptance = j.at("csr").at("acceptance").get<std::map<std::string, double>>();
        a.csr_converged = j.at("csr").at("converged").get<bool>();
    }
    if (j.contains("sensitivity"))
        for (auto& [depth, m] : j.at("sensitivity").items())
            a.sensitivity[std::stoi(depth)] = detail::model_outputs_from_json(m);
    return a;
}

namespace detail {

inline std::string company_tag(const CompanyDataset& ds) {
    return std::string(line_name(ds.line)) + ":" + ds.group_id;
}

struct StackedLeg {
    StackedPrediction prediction;
    double theta_level1 = 0.0;
    double theta_level2 = 0.0;
    SquareGrid ann_rectangle;  // standalone net predictions, reused by the benchmark
};

// Fits the net-dependent part of the stack at one depth: the first-level net
// on (AY*, DY*) and the stacking net on the five views.
inline StackedLeg fit_stacked_leg(const CompanyDataset& ds, const RunConfig& cfg, int depth,
                                  const std::vector<Sample>& train, const std::vector<Sample>& test,
                                  const SquareGrid& rf_grid, const SquareGrid& gb_grid,
                                  const SquareGrid& csr_grid, const DevFactors& factors) {
    const std::string tag = company_tag(ds);
    const std::uint64_t ann_master = derive_seed(cfg.seed, "ann", tag);

    auto fit_theta = [&](double theta, std::size_t k) {
        AnnOptions options;
        options.depth = depth;
        options.width = cfg.ann_width;
        options.theta = theta;
        options.epochs = cfg.ann_epochs;
        options.learning_rate = cfg.ann_learning_rate;
        options.seed = derive_seed(ann_master, "grid", static_cast<std::uint64_t>(k));
        return fit_ann(train, options);
    };
    auto score = [&](const NeuralNet& net) {
        std::vector<double> preds, targets;
        for (const auto& s : test) {
            preds.push_back(net.predict(s.x));
            targets.push_back(s.y);
        }
        return rmse(preds, targets);
    };
    auto ann_result = grid_search(cfg.grid_theta, fit_theta, score, /*skip_failures=*/true);

    StackedLeg leg;
    leg.theta_level1 = ann_result.config;
    leg.ann_rectangle = predict_grid(ann_result.model, ds.n());

    Level1Grids grids{rf_grid, gb_grid, leg.ann_rectangle, csr_grid, factors};
    const std::vector<StackedCell> cells = assemble_features(grids, ds);
    Level2Fit level2 = fit_level2(cells, cfg.grid_theta, depth, derive_seed(cfg.seed, "level2", tag),
                                  cfg.ann_epochs, cfg.ann_learning_rate, cfg.ann_width);
    leg.theta_level2 = level2.theta;
    leg.prediction = predict_rectangle(level2.net, cells, ds);
    return leg;
}

inline ModelOutputs outputs_from_distribution(const ReserveDistribution& dist, const Actuals& actuals) {
    ModelOutputs m;
    m.point_reserve = dist.mean_reserve();
    m.point_next_year = dist.mean_next_year();
    m.point_ultimate = dist.mean_ultimate();
    m.dist_mean_reserve = dist.mean_reserve();
    m.dist_sd_reserve = dist.sd_reserve();
    m.dist_p995_reserve = dist.percentile_reserve(0.995);
    m.exceeded = actuals.reserve > m.dist_p995_reserve;
    return m;
}

inline ModelOutputs outputs_from_point_and_distribution(double reserve, double next_year, double ultimate,
                                                        const ReserveDistribution& dist,
                                                        const Actuals& actuals) {
    ModelOutputs m;
    m.point_reserve = reserve;
    m.point_next_year = next_year;
    m.point_ultimate = ultimate;
    m.dist_mean_reserve = dist.mean_reserve();
    m.dist_sd_reserve = dist.sd_reserve();
    m.dist_p995_reserve = dist.percentile_reserve(0.995);
    m.exceeded = actuals.reserve > m.dist_p995_reserve;
    return m;
}

}  // namespace detail

// Runs every model on one triangle. Model failures are recorded, never
// propagated: one triangle cannot spoil the others.
inline CompanyArtifact run_company(const CompanyDataset& ds, const RunConfig& cfg) {
    const std::string tag = detail::company_tag(ds);
    CompanyArtifact artifact;
    artifact.group = ds.group_id;
    artifact.line = ds.line;
    artifact.actuals = compute_actuals(ds);

    const LossTriangle observed = ds.observed_triangle();

    // Scaled triangle: level-2 development-factor feature and the Table-2 analog.
    std::optional<DevFactors> scaled_factors;
    try {
        SquareGrid scaled(ds.n());
        for (int i = 1; i <= ds.n(); ++i)
            for (int j = 1; j <= ds.last_lag(i); ++j)
                scaled.at(i, j) = ds.rectangle.at(i, j) / ds.premiums[static_cast<std::size_t>(i - 1)];
        scaled_factors = dev_factors(LossTriangle(std::move(scaled), Kind::cumulative));
        artifact.dev_factors = scaled_factors->lambda;
    } catch (const Error& e) {
        artifact.failures["dev_factors"] = e.what();
    }

    // The five model legs. The machine-learning fits and the stochastic
    // benchmarks are independent given their derived seeds and run
    // concurrently; everything joins before the stacking step.
    auto odp_task = std::async(std::launch::async, [&]() {
        const OdpFit fit = fit_odp(observed);
        return odp_bootstrap(fit, cfg.bootstrap_sims, derive_seed(cfg.seed, "odp", tag));
    });
    auto mack_task = std::async(std::launch::async, [&]() {
        const MackFit fit = fit_mack(observed);
        return mack_bootstrap(fit, cfg.bootstrap_sims, derive_seed(cfg.seed, "mack", tag));
    });
    auto csr_task = std::async(std::launch::async, [&]() {
        CsrOptions options;
        options.n_draws = cfg.mcmc_draws;
        options.burn_in = cfg.mcmc_burn_in;
        options.seed = derive_seed(cfg.seed, "csr", tag);
        return csr_sample_posterior(ds, options);
    });

    const std::vector<CellFeatures> features = build_features(ds);
    std::vector<Sample> train, test;
    for (const auto& c : features) {
        Sample s;
        s.x = {c.ay_star, c.dy_star};
        s.y = c.d_star;
        (c.split == Split::train ? train : test).push_back(std::move(s));
    }
    auto test_rmse = [&](const auto& model) {
        std::vector<double> preds, targets;
        for (const auto& s : test) {
            preds.push_back(model.predict(s.x));
            targets.push_back(s.y);
        }
        return rmse(preds, targets);
    };

    auto rf_task = std::async(std::launch::async, [&]() {
        std::vector<std::pair<int, int>> grid;  // (Obs_RF, N), first-order ties
        for (int obs : cfg.grid_obs_rf)
            for (int nf : cfg.grid_n_features) grid.push_back({obs, nf});
        const std::uint64_t master = derive_seed(cfg.seed, "rf", tag);
        auto fit = [&](const std::pair<int, int>& p, std::size_t k) {
            return fit_rf(train, cfg.rf_trees, p.second, p.first,
                          derive_seed(master, "grid", static_cast<std::uint64_t>(k)));
        };
        return grid_search(grid, fit, test_rmse);
    });
    auto gb_task = std::async(std::launch::async, [&]() {
        const std::uint64_t master = derive_seed(cfg.seed, "gb", tag);
        auto fit = [&](int obs, std::size_t k) {
            return fit_gb(train, cfg.gb_trees, obs, derive_seed(master, "grid", static_cast<std::uint64_t>(k)),
                          cfg.gb_subsample);
        };
        return grid_search(cfg.grid_obs_gb, fit, test_rmse);
    });

    std::optional<ForestModel> rf_model;
    std::optional<BoostModel> gb_model;
    double obs_rf = 0.0, n_features_sel = 0.0, obs_gb = 0.0;
    try {
        auto rf = rf_task.get();
        obs_rf = rf.config.first;
        n_features_sel = rf.config.second;
        rf_model = std::move(rf.model);
    } catch (const std::exception& e) {
        artifact.failures["rf"] = e.what();
    }
    try {
        auto gb = gb_task.get();
        obs_gb = gb.config;
        gb_model = std::move(gb.model);
    } catch (const std::exception& e) {
        artifact.failures["gb"] = e.what();
    }

    try {
        artifact.models["odp"] = detail::outputs_from_distribution(odp_task.get(), artifact.actuals);
    } catch (const std::exception& e) {
        artifact.failures["odp"] = e.what();
    }
    try {
        artifact.models["mack"] = detail::outputs_from_distribution(mack_task.get(), artifact.actuals);
    } catch (const std::exception& e) {
        artifact.failures["mack"] = e.what();
    }

    std::optional<CsrPosterior> posterior;
    std::optional<SquareGrid> csr_grid;
    try {
        posterior = csr_task.get();
        artifact.csr_valid = true;
        artifact.csr_means = csr_posterior_means(*posterior);
        artifact.csr_acceptance = posterior->acceptance_rates;
        artifact.csr_converged = posterior->converged;
        artifact.models["csr"] = detail::outputs_from_distribution(
            csr_reserve_distribution(*posterior, ds, derive_seed(cfg.seed, "csr_sim", tag)), artifact.actuals);
        csr_grid = csr_feature(*posterior, ds, derive_seed(cfg.seed, "csr_feature", tag));
    } catch (const std::exception& e) {
        artifact.failures["csr"] = e.what();
    }

    // Stacked legs: the configured depth plus any sensitivity depths. The
    // standalone net benchmark falls out of the main leg's first-level fit.
    std::vector<int> depths{cfg.ann_depth};
    for (int d : cfg.sensitivity_depths)
        if (d != cfg.ann_depth) depths.push_back(d);

    if (rf_model && gb_model && csr_grid && scaled_factors) {
        const SquareGrid rf_grid = predict_grid(*rf_model, ds.n());
        const SquareGrid gb_grid = predict_grid(*gb_model, ds.n());
        for (int depth : depths) {
            const bool main_leg = depth == cfg.ann_depth;
            try {
                const detail::StackedLeg leg = detail::fit_stacked_leg(ds, cfg, depth, train, test, rf_grid,
                                                                       gb_grid, *csr_grid, *scaled_factors);
                const ReserveDistribution stacked_dist = lognormal_reserve_distribution(
                    leg.prediction.scaled, ds, cfg.lognormal_sims, derive_seed(cfg.seed, "stacked_sim", tag),
                    cfg.eq17);
                const ModelOutputs stacked = detail::outputs_from_point_and_distribution(
                    leg.prediction.reserve, leg.prediction.next_year_payments, leg.prediction.ultimate,
                    stacked_dist, artifact.actuals);
                artifact.sensitivity[depth] = stacked;
                if (main_leg) {
                    artifact.models["stacked_ann"] = stacked;
                    artifact.hyper_valid = true;
                    artifact.obs_rf = obs_rf;
                    artifact.n_features = n_features_sel;
                    artifact.obs_gb = obs_gb;
                    artifact.theta_level1 = leg.theta_level1;
                    artifact.theta_level2 = leg.theta_level2;

                    // Standalone net benchmark: same first-level net, same
                    // log-normal variability machinery.
                    double reserve = 0.0, next_year = 0.0, ultimate = 0.0;
                    for (int i = 1; i <= ds.n(); ++i) {
                        const double premium = ds.premiums[static_cast<std::size_t>(i - 1)];
                        const int lag = ds.last_lag(i);
                        const double paid_star = ds.rectangle.at(i, lag) / premium;
                        reserve += premium * (leg.ann_rectangle.at(i, ds.n()) - paid_star);
                        ultimate += premium * leg.ann_rectangle.at(i, ds.n());
                        if (lag < ds.n())
                            next_year += premium * (leg.ann_rectangle.at(i, lag + 1) - paid_star);
                    }
                    const ReserveDistribution ann_dist =
                        lognormal_reserve_distribution(leg.ann_rectangle, ds, cfg.lognormal_sims,
                                                       derive_seed(cfg.seed, "ann_sim", tag), cfg.eq17);
                    artifact.models["ann"] = detail::outputs_from_point_and_distribution(
                        reserve, next_year, ultimate, ann_dist, artifact.actuals);
                }
            } catch (const std::exception& e) {
                const std::string key = main_leg ? "stacked_ann" : "stacked_ann_depth" + std::to_string(depth);
                artifact.failures[key] = e.what();
                if (main_leg) artifact.failures["ann"] = e.what();
            }
        }
    } else {
        std::string reason = "level-1 inputs unavailable:";
        for (const char* leg : {"rf", "gb", "csr", "dev_factors"})
            if (artifact.failures.count(leg)) reason += std::string(" ") + leg;
        artifact.failures["stacked_ann"] = reason;
        artifact.failures["ann"] = reason;
    }
    return artifact;
}

// ---------------------------------------------------------------------------
// Ingest and selection

struct IngestResult {
    std::map<Line, std::vector<CompanyDataset>> parsed;
    std::vector<CompanyDataset> selected;  // selection order, lines in CA/PA/WC/OL order
};

inline IngestResult ingest(const RunConfig& cfg) {
    IngestResult out;
    std::ifstream sel_in(cfg.selection_path);
    if (!sel_in) throw ArgumentError("ingest: cannot open selection list " + cfg.selection_path);
    const SelectionList selection = SelectionList::parse(sel_in);

    for (Line line : cfg.lines) {
        auto path_it = cfg.data_paths.find(line);
        if (path_it == cfg.data_paths.end())
            throw ArgumentError(std::string("ingest: no data path configured for line ") + line_name(line));
        std::ifstream in(path_it->second);
        if (!in) throw ArgumentError("ingest: cannot open " + path_it->second);
        auto col_it = cfg.columns.find(line);
        const ColumnMap columns = col_it != cfg.columns.end() ? col_it->second : ColumnMap::defaults_for(line);
        out.parsed[line] = parse_schedule_p(in, line, columns);

        auto codes_it = selection.codes.find(line);
        if (codes_it == selection.codes.end())
            throw SelectionError(std::string("ingest: selection list has no section for line ") +
                                 line_name(line));
        std::vector<std::string> codes = codes_it->second;
        if (cfg.limit > 0 && static_cast<int>(codes.size()) > cfg.limit)
            codes.resize(static_cast<std::size_t>(cfg.limit));
        std::vector<CompanyDataset> picked = select_triangles(out.parsed[line], codes, line);
        for (auto& ds : picked) out.selected.push_back(std::move(ds));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation and report writing

inline std::vector<std::string> report_models() { return {"odp", "mack", "csr", "ann", "stacked_ann"}; }

inline json aggregate_report(const std::vector<CompanyArtifact>& artifacts, const RunConfig& cfg) {
    std::vector<CompanyResult> results;
    results.reserve(artifacts.size());
    for (const auto& a : artifacts) {
        CompanyResult r;
        r.group_id = a.group;
        r.line = a.line;
        r.actuals = a.actuals;
        r.models = a.models;
        r.failures = a.failures;
        results.push_back(std::move(r));
    }
    const EvaluationReport eval = build_report(results, report_models());

    json report;
    report["meta"] = {{"seed", cfg.seed},
                      {"eq17_variant", cfg.eq17 == Eq17Variant::standard ? "standard" : "printed"},
                      {"limit", cfg.limit},
                      {"counts",
                       {{"rf_trees", cfg.rf_trees},
                        {"gb_trees", cfg.gb_trees},
                        {"bootstrap_sims", cfg.bootstrap_sims},
                        {"mcmc_draws", cfg.mcmc_draws},
                        {"mcmc_burn_in", cfg.mcmc_burn_in},
                        {"lognormal_sims", cfg.lognormal_sims},
                        {"ann_epochs", cfg.ann_epochs},
                        {"ann_depth", cfg.ann_depth}}}};
    json k_per_line = json::object();
    for (const auto& [line, k] : eval.companies_per_line) k_per_line[line_name(line)] = k;
    report["meta"]["companies"] = k_per_line;

    // Table 1 analog: means of the selected hyperparameters.
    json hyper = json::object();
    for (Line line : all_lines()) {
        double orf = 0, nf = 0, ogb = 0, t1 = 0, t2 = 0;
        std::size_t k = 0;
        for (const auto& a : artifacts) {
            if (a.line != line || !a.hyper_valid) continue;
            orf += a.obs_rf;
            nf += a.n_features;
            ogb += a.obs_gb;
            t1 += a.theta_level1;
            t2 += a.theta_level2;
            ++k;
        }
        if (k == 0) continue;
        const double kk = static_cast<double>(k);
        hyper[line_name(line)] = {{"obs_rf", orf / kk},
                                  {"n_features", nf / kk},
                                  {"obs_gb", ogb / kk},
                                  {"theta_level1", t1 / kk},
                                  {"theta_level2", t2 / kk},
                                  {"k", k}};
    }
    report["hyperparameter_means"] = hyper;

    // Table 2 analog: per-line means of the development factors on the scaled
    // triangles. Entry m (1-based) is the factor for lag m -> m+1; the last
    // entry is the lag-1 convention value 1.
    json factor_means = json::object();
    for (Line line : all_lines()) {
        std::vector<double> acc;
        std::size_t k = 0;
        for (const auto& a : artifacts) {
            if (a.line != line || a.dev_factors.empty()) continue;
            if (acc.empty()) acc.assign(a.dev_factors.size(), 0.0);
            for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += a.dev_factors[m];
            ++k;
        }
        if (k == 0) continue;
        std::vector<double> table;
        for (std::size_t m = 1; m < acc.size(); ++m) table.push_back(acc[m] / static_cast<double>(k));
        table.push_back(acc[0] / static_cast<double>(k));  // the convention value, 1 by construction
        factor_means[line_name(line)] = {{"factors", table}, {"k", k}};
    }
    report["dev_factor_means"] = factor_means;

    // Tables 3 and 4 analogs: means of the posterior parameter means.
    json csr_mean = json::object(), csr_sd = json::object();
    for (Line line : all_lines()) {
        std::vector<double> alpha, beta, sigma;
        double gamma = 0, logelr = 0;
        std::size_t k = 0;
        for (const auto& a : artifacts) {
            if (a.line != line || !a.csr_valid) continue;
            if (alpha.empty()) {
                alpha.assign(a.csr_means.alpha.size(), 0.0);
                beta.assign(a.csr_means.beta.size(), 0.0);
                sigma.assign(a.csr_means.sigma.size(), 0.0);
            }
            for (std::size_t m = 0; m < alpha.size(); ++m) {
                alpha[m] += a.csr_means.alpha[m];
                beta[m] += a.csr_means.beta[m];
                sigma[m] += a.csr_means.sigma[m];
            }
            gamma += a.csr_means.gamma;
            logelr += a.csr_means.logelr;
            ++k;
        }
        if (k == 0) continue;
        const double kk = static_cast<double>(k);
        for (auto* v : {&alpha, &beta, &sigma})
            for (double& x : *v) x /= kk;
        csr_mean[line_name(line)] = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma / kk},
                                     {"logelr", logelr / kk}, {"k", k}};
        csr_sd[line_name(line)] = {{"sigma", sigma}, {"k", k}};
    }
    report["csr_mean_params"] = csr_mean;
    report["csr_sd_params"] = csr_sd;

    // Tables 5 and 6 analogs.
    json errors = json::object(), risk = json::object();
    for (const auto& [line, models] : eval.lines) {
        json el = json::object(), rl = json::object();
        for (const auto& [model, m] : models) {
            el[model] = {{"pct_rmse_reserve", m.pct_rmse_reserve},
                         {"pct_rmse_next_year", m.pct_rmse_next_year},
                         {"pct_rmse_ultimate", m.pct_rmse_ultimate},
                         {"k", m.k}};
            rl[model] = {{"ratio_rr_995", m.ratio_rr},
                         {"ratio_sigma", m.ratio_sigma},
                         {"kupiec_p", m.kupiec_p},
                         {"exceedances", m.exceedances},
                         {"k", m.k}};
        }
        errors[line_name(line)] = el;
        risk[line_name(line)] = rl;
    }
    report["errors"] = errors;
    report["risk"] = risk;

    // Table 7 analog when sensitivity legs are present.
    std::set<int> depths;
    for (const auto& a : artifacts)
        for (const auto& [d, m] : a.sensitivity) depths.insert(d);
    if (!depths.empty()) {
        json sens = json::object();
        for (Line line : all_lines()) {
            json per_depth = json::object();
            for (int depth : depths) {
                std::vector<double> pr, ar, pp, ap, pu, au;
                for (const auto& a : artifacts) {
                    if (a.line != line) continue;
                    auto it = a.sensitivity.find(depth);
                    if (it == a.sensitivity.end()) continue;
                    pr.push_back(it->second.point_reserve);
                    ar.push_back(a.actuals.reserve);
                    pp.push_back(it->second.point_next_year);
                    ap.push_back(a.actuals.next_year_payments);
                    pu.push_back(it->second.point_ultimate);
                    au.push_back(a.actuals.ultimate);
                }
                if (pr.empty()) continue;
                per_depth[std::to_string(depth)] = {{"pct_rmse_reserve", pct_rmse(pr, ar)},
                                                    {"pct_rmse_next_year", pct_rmse(pp, ap)},
                                                    {"pct_rmse_ultimate", pct_rmse(pu, au)},
                                                    {"k", pr.size()}};
            }
            if (!per_depth.empty()) sens[line_name(line)] = per_depth;
        }
        report["sensitivity"] = sens;
    }

    // Failure roster so gaps are visible in the aggregate.
    json failures = json::object();
    for (const auto& a : artifacts)
        if (!a.failures.empty())
            failures[std::string(line_name(a.line)) + ":" + a.group] = a.failures;
    report["failures"] = failures;
    return report;
}

namespace detail {

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

}  // namespace detail

// Writes report.json, the per-table CSVs and per_company/<line>_<group>.json.
inline void write_outputs(const std::string& output_dir, const std::vector<CompanyArtifact>& artifacts,
                          const json& report) {
    namespace fs = std::filesystem;
    const fs::path root(output_dir);
    fs::create_directories(root / "per_company");

    detail::write_file(root / "report.json", report.dump(2) + "\n");

    std::ostringstream t5, t6;
    t5 << "line,model,metric,value\n";
    t6 << "line,model,metric,value\n";
    if (report.contains("errors")) {
        for (const auto& [line, models] : report.at("errors").items())
            for (const auto& [model, m] : models.items()) {
                t5 << line << "," << model << ",pct_rmse_reserve,"
                   << detail::format_value(m.at("pct_rmse_reserve").get<double>()) << "\n";
                t5 << line << "," << model << ",pct_rmse_next_year,"
                   << detail::format_value(m.at("pct_rmse_next_year").get<double>()) << "\n";
                t5 << line << "," << model << ",pct_rmse_ultimate,"
                   << detail::format_value(m.at("pct_rmse_ultimate").get<double>()) << "\n";
            }
    }
    if (report.contains("risk")) {
        for (const auto& [line, models] : report.at("risk").items())
            for (const auto& [model, m] : models.items()) {
                t6 << line << "," << model << ",ratio_rr_995,"
                   << detail::format_value(m.at("ratio_rr_995").get<double>()) << "\n";
                t6 << line << "," << model << ",ratio_sigma,"
                   << detail::format_value(m.at("ratio_sigma").get<double>()) << "\n";
                t6 << line << "," << model << ",kupiec_p,"
                   << detail::format_value(m.at("kupiec_p").get<double>()) << "\n";
            }
    }
    detail::write_file(root / "table5.csv", t5.str());
    detail::write_file(root / "table6.csv", t6.str());

    if (report.contains("sensitivity")) {
        std::ostringstream t7;
        t7 << "line,model,metric,value\n";
        for (const auto& [line, per_depth] : report.at("sensitivity").items())
            for (const auto& [depth, m] : per_depth.items()) {
                const std::string model = "stacked_ann_depth" + depth;
                t7 << line << "," << model << ",pct_rmse_reserve,"
                   << detail::format_value(m.at("pct_rmse_reserve").get<double>()) << "\n";
                t7 << line << "," << model << ",pct_rmse_next_year,"
                   << detail::format_value(m.at("pct_rmse_next_year").get<double>()) << "\n";
                t7 << line << "," << model << ",pct_rmse_ultimate,"
                   << detail::format_value(m.at("pct_rmse_ultimate").get<double>()) << "\n";
            }
        detail::write_file(root / "table7.csv", t7.str());
    }

    for (const auto& a : artifacts) {
        const std::string name = std::string(line_name(a.line)) + "_" + a.group + ".json";
        detail::write_file(root / "per_company" / name, artifact_to_json(a).dump(2) + "\n");
    }
}

struct PipelineOutput {
    std::vector<CompanyArtifact> artifacts;
    json report;
};

// Full experiment: ingest, run every model on every selected triangle with a
// fixed-size worker pool, aggregate, write outputs. Results are identical
// for any job count because each company's seeds derive from (master seed,
// line:group, role) alone.
inline PipelineOutput run_pipeline(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const IngestResult data = ingest(cfg);
    const std::size_t total = data.selected.size();
    log << "runoff: " << total << " triangles selected\n";

    std::vector<CompanyArtifact> artifacts(total);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= total) return;
            const CompanyDataset& ds = data.selected[k];
            artifacts[k] = run_company(ds, cfg);
            const std::size_t finished = ++done;
            std::lock_guard<std::mutex> guard(log_mutex);
            log << "runoff: [" << finished << "/" << total << "] " << line_name(ds.line) << " "
                << ds.group_id;
            if (!artifacts[k].failures.empty()) log << " (" << artifacts[k].failures.size() << " failures)";
            log << "\n";
        }
    };
    const int n_workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(total)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    PipelineOutput out;
    out.artifacts = std::move(artifacts);
    out.report = aggregate_report(out.artifacts, cfg);
    write_outputs(cfg.output_dir, out.artifacts, out.report);
    return out;
}

// Re-aggregates a report from previously written per-company artifacts.
inline PipelineOutput reaggregate(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(cfg.output_dir) / "per_company";
    if (!fs::exists(dir)) throw ArgumentError("report: no per-company artifacts under " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    PipelineOutput out;
    for (const auto& f : files) {
        std::ifstream in(f);
        json j;
        in >> j;
        out.artifacts.push_back(artifact_from_json(j));
    }
    out.report = aggregate_report(out.artifacts, cfg);
    write_outputs(cfg.output_dir, out.artifacts, out.report);
    return out;
}

}  // namespace runoff
