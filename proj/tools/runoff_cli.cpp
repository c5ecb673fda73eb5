// Command-line driver: ingest validation, the full reserving pipeline, the
// hidden-layer sensitivity study, and report re-aggregation.

#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "runoff/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string lines;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int limit = -1;
    int depth = 0;
    int jobs = 0;
    std::string eq17;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool run_flags) {
    cmd->add_option("--config", flags.config_path, "Path to the JSON run configuration")->required();
    if (run_flags) {
        cmd->add_option("--seed", flags.seed, "Master seed override")->each([&flags](const std::string&) {
            flags.seed_set = true;
        });
        cmd->add_option("--lines", flags.lines, "Comma-separated lines of business (CA,PA,WC,OL)");
        cmd->add_option("--limit", flags.limit, "First K triangles per line");
        cmd->add_option("--depth", flags.depth, "Hidden layers in both nets (1, 2 or 3)")
            ->check(CLI::Range(1, 3));
        cmd->add_option("--jobs", flags.jobs, "Worker threads across triangles")->check(CLI::PositiveNumber);
        cmd->add_option("--eq17", flags.eq17, "Moment-inversion variant: standard|printed")
            ->check(CLI::IsMember({"standard", "printed"}));
    }
}

runoff::RunConfig config_from(const CommonFlags& flags) {
    runoff::RunConfig cfg = runoff::load_config(flags.config_path);
    if (flags.seed_set) cfg.seed = flags.seed;
    if (flags.limit >= 0) cfg.limit = flags.limit;
    if (flags.depth > 0) cfg.ann_depth = flags.depth;
    if (flags.jobs > 0) cfg.jobs = flags.jobs;
    if (!flags.eq17.empty()) cfg.eq17 = runoff::parse_eq17_variant(flags.eq17);
    if (!flags.lines.empty()) {
        cfg.lines.clear();
        std::stringstream ss(flags.lines);
        std::string token;
        while (std::getline(ss, token, ',')) cfg.lines.push_back(runoff::parse_line(token));
    }
    return cfg;
}

int run_ingest(const CommonFlags& flags) {
    const runoff::RunConfig cfg = config_from(flags);
    const runoff::IngestResult data = runoff::ingest(cfg);
    for (runoff::Line line : cfg.lines) {
        std::size_t selected = 0;
        for (const auto& ds : data.selected)
            if (ds.line == line) ++selected;
        std::cout << runoff::line_name(line) << ": parsed " << data.parsed.at(line).size()
                  << " companies, selected " << selected << "\n";
    }
    std::cout << "total selected: " << data.selected.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic loss reserving over Schedule P triangles"};
    app.require_subcommand(1);

    CommonFlags ingest_flags, run_flags, sens_flags, report_flags;
    CLI::App* ingest_cmd = app.add_subcommand("ingest", "Parse and validate the configured data");
    add_common(ingest_cmd, ingest_flags, false);
    ingest_cmd->add_option("--lines", ingest_flags.lines, "Comma-separated lines of business");
    ingest_cmd->add_option("--limit", ingest_flags.limit, "First K triangles per line");

    CLI::App* run_cmd = app.add_subcommand("run", "Run the full reserving pipeline");
    add_common(run_cmd, run_flags, true);

    CLI::App* sens_cmd =
        app.add_subcommand("sensitivity", "Run the stacked model at one, two and three hidden layers");
    add_common(sens_cmd, sens_flags, true);

    CLI::App* report_cmd = app.add_subcommand("report", "Re-aggregate reports from per-company artifacts");
    add_common(report_cmd, report_flags, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed()) return run_ingest(ingest_flags);
        if (run_cmd->parsed()) {
            runoff::RunConfig cfg = config_from(run_flags);
            runoff::run_pipeline(cfg, std::cerr);
            std::cout << "report written to " << cfg.output_dir << "\n";
            return 0;
        }
        if (sens_cmd->parsed()) {
            runoff::RunConfig cfg = config_from(sens_flags);
            cfg.sensitivity_depths = {1, 2, 3};
            runoff::run_pipeline(cfg, std::cerr);
            std::cout << "sensitivity report written to " << cfg.output_dir << "\n";
            return 0;
        }
        if (report_cmd->parsed()) {
            runoff::RunConfig cfg = config_from(report_flags);
            runoff::reaggregate(cfg);
            std::cout << "report rebuilt in " << cfg.output_dir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
