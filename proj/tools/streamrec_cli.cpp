#include "streamrec/error.hpp"
#include "streamrec/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <sstream>

namespace {

int exit_code(streamrec::ErrorCategory c) {
    using streamrec::ErrorCategory;
    switch (c) {
    case ErrorCategory::Parse: return 2;
    case ErrorCategory::RejectedEdge: return 3;
    case ErrorCategory::Schedule: return 4;
    case ErrorCategory::InductiveViolation: return 5;
    case ErrorCategory::Config: return 6;
    case ErrorCategory::EmptyEvaluation: return 7;
    case ErrorCategory::DegenerateVariance: return 8;
    case ErrorCategory::Checkpoint: return 9;
    case ErrorCategory::Io: return 10;
    }
    return 1;
}

std::vector<std::string> split_models(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming top-k recommendation: training, incremental replay and reporting"};
    app.require_subcommand(1);

    std::string config_path;
    std::string models;
    std::uint64_t seed = 0;
    std::string out_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--seed", seed, "override the config seed");
        cmd->add_option("--out", out_dir, "override the output directory");
        cmd->add_option("--models", models, "comma-separated model names to run");
    };
    auto* train = app.add_subcommand("train", "grid-search and checkpoint every model");
    auto* replay = app.add_subcommand("replay", "replay streaming chunks through trained models");
    auto* skyline = app.add_subcommand("skyline", "replay plus retraining at every step");
    auto* coldstart = app.add_subcommand("coldstart", "replay scored on cold-start items only");
    auto* probe = app.add_subcommand("probe", "stationarity probe with the LightGCN settings");
    for (auto* cmd : {train, replay, skyline, coldstart, probe}) add_common(cmd);

    auto* report = app.add_subcommand("report", "summarize a run directory");
    std::string report_config;
    report->add_option("--config", report_config, "config whose output directory is summarized");
    report->add_option("--out", out_dir, "run directory to summarize");

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) {
            std::string dir = out_dir;
            if (dir.empty() && !report_config.empty()) {
                dir = streamrec::load_experiment_config(report_config).output_dir;
            }
            if (dir.empty()) throw streamrec::ConfigError("report needs --out or --config");
            std::cout << streamrec::cmd_report(dir);
            return 0;
        }

        streamrec::RunOptions opts;
        if (app.get_subcommands().front()->count("--seed") > 0) opts.seed = seed;
        if (!out_dir.empty()) opts.output_dir = out_dir;
        opts.models = split_models(models);
        const auto cfg = streamrec::apply_overrides(streamrec::load_experiment_config(config_path), opts);

        if (train->parsed()) streamrec::cmd_train(cfg);
        else if (replay->parsed()) streamrec::cmd_replay(cfg);
        else if (skyline->parsed()) streamrec::cmd_replay(cfg, true);
        else if (coldstart->parsed()) streamrec::cmd_coldstart(cfg);
        else if (probe->parsed()) streamrec::cmd_probe(cfg);
        std::cerr << fmt::format("done; outputs in {}\n", cfg.output_dir);
    } catch (const streamrec::Error& e) {
        std::cerr << fmt::format("error [{}]: {}\n", streamrec::category_name(e.category()), e.what());
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
