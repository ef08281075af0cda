#pragma once

#include "streamrec/graph_store.hpp"
#include "streamrec/metrics.hpp"
#include "streamrec/recommender.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace streamrec {

struct ScheduleConfig {
    std::string unit = "months";  // seconds | days | months (30 days)
    std::int64_t offline = 24;
    std::int64_t streaming = 3;
    std::int64_t test = 6;
    std::size_t num_chunks = 3;
    double validation_fraction = 0.1;

    WindowSpec windows() const;
    friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct ModelSpec {
    std::string name;
    ModelKind kind = ModelKind::Lce;
    nlohmann::json params = nlohmann::json::object();
    // Parameter name -> candidate values; the cartesian product is searched.
    nlohmann::json grid = nlohmann::json::object();

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct EvalSettings {
    std::vector<int> cutoffs{20};
    ColdStartMode cold_start_mode = ColdStartMode::Exclude;
    bool skyline = false;
    bool per_user = true;

    friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

struct ExperimentConfig {
    std::string data_path;
    std::string data_format = "tsv";
    std::uint32_t kcore = 0;  // 0 disables filtering
    ScheduleConfig schedule;
    std::vector<ModelSpec> models;
    EvalSettings eval;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Command-line overrides.
struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::vector<std::string> models;  // empty keeps all
};

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts);

// Every parameter combination of the entry's grid merged over its params, in
// a fixed order.
std::vector<nlohmann::json> expand_grid(const ModelSpec& entry);

// Load, optionally k-core filter, schedule and split the configured log.
ReplayData prepare_data(const ExperimentConfig& cfg);

// Grid search on validation recall@20; writes grid.csv, model_info.csv and a
// checkpoint per model into the output directory.
void cmd_train(const ExperimentConfig& cfg);
// Replays the trained checkpoints; writes metrics.csv, curves.csv and, when
// per-user output is on, per_user.csv. `force_skyline` adds skyline runs.
void cmd_replay(const ExperimentConfig& cfg, bool force_skyline = false);
// Replay restricted to cold-start relevant items; writes coldstart.csv.
void cmd_coldstart(const ExperimentConfig& cfg);
// Stationarity probe with the configured LightGCN settings; writes probe.csv.
void cmd_probe(const ExperimentConfig& cfg);
// Summarizes a run directory; writes report.txt and returns its text.
std::string cmd_report(const std::filesystem::path& run_dir);

}  // namespace streamrec
