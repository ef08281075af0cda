#pragma once

#include "streamrec/baselines.hpp"
#include "streamrec/graph_store.hpp"
#include "streamrec/metrics.hpp"
#include "streamrec/propagation.hpp"
#include "streamrec/recommender.hpp"

#include <span>
#include <string>
#include <vector>

namespace streamrec {

struct NamedModel {
    std::string name;
    Recommender* model = nullptr;
};

struct StepRecord {
    std::string model;
    std::size_t step_index = 0;
    std::string mode;  // "incremental" or "skyline"
    MetricsRecord metrics;
};

// "offline" for step 0, then "t1".."tK".
std::string step_label(std::size_t step);

// Scores the model's current state against the test window, excluding the
// items each user already has in `exclusion`.
MetricsRecord evaluate_model(const Recommender& model, const GraphSnapshot& exclusion,
                             std::span<const EdgeRecord> test_edges, const ItemClasses& classes,
                             const EvalConfig& cfg);

ItemClasses item_classes(const ReplayData& data);

// Offline-trained models fed G_t0 .. G_tK through their update rules, each
// step evaluated on the full test window. Records are ordered by step, then
// by model.
std::vector<StepRecord> run_replay(std::span<const NamedModel> models, const ReplayData& data,
                                   const EvalConfig& cfg);

// Training data for a model retrained on everything observed up to `step`:
// the last validation fraction of those user-item edges is held out.
TrainingData skyline_training_data(const ReplayData& data, std::size_t step);

// For every step, a fresh copy of each prototype is trained from scratch on
// skyline_training_data and evaluated like run_replay.
std::vector<StepRecord> run_skyline(std::span<const NamedModel> prototypes, const ReplayData& data,
                                    const EvalConfig& cfg);

struct ProbeBucket {
    std::string label;  // "D1".."D4"
    std::size_t ui_edges = 0;
    LightGcnParams params;
    TrainingTrace trace;
    MetricsRecord metrics;
};

// Offline user-item edges cut into four chronological quartiles by count;
// every bucket also carries all user-user edges.
std::vector<std::vector<EdgeRecord>> probe_buckets(const ReplayData& data);

// Both tables are learned on D1. For D2..D4 the `fixed_side` table is frozen
// at its D1 value and the other table is retrained from the D1 state on that
// bucket. Each bucket model is evaluated on the test window over the offline
// graph. `duplicate_first` replaces D2 with a copy of D1 (control run).
std::vector<ProbeBucket> stationarity_probe(const ReplayData& data, const LightGcnConfig& cfg,
                                            NodeSet fixed_side, const EvalConfig& eval,
                                            bool duplicate_first = false);

}  // namespace streamrec
