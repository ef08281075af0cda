#pragma once

#include "streamrec/baselines.hpp"
#include "streamrec/graph_store.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace streamrec {

enum class ModelKind { Lce, LightGcn, Als, Slim, Rp3b, Pop };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct TrainingData {
    GraphSnapshot train;
    std::vector<EdgeRecord> validation;  // user-item edges held out of `train`
};

// Common face of every model in the replay harness. Scoring always happens
// against the snapshot last passed to update(); fit() leaves the model
// updated to the training graph.
class Recommender {
public:
    virtual ~Recommender() = default;

    virtual ModelKind kind() const = 0;
    virtual void fit(const TrainingData& data) = 0;
    // The model's streaming rule for a grown graph. Parameters stay fixed.
    virtual void update(const GraphSnapshot& g) = 0;
    // Items [0, n) can be ranked; the rest are unscoreable.
    virtual std::uint32_t scoreable_items() const = 0;
    virtual void score(std::uint32_t user, std::span<double> out) const = 0;
    virtual std::size_t param_count() const = 0;

    // Hyperparameters in the config schema, including the seed.
    virtual nlohmann::json hyperparams() const = 0;
    virtual nlohmann::json state() const = 0;
    virtual void load_state(const nlohmann::json& state) = 0;
    // Untrained model with identical hyperparameters.
    virtual std::unique_ptr<Recommender> fresh() const = 0;
};

// Unknown keys in `params` raise ConfigError. A "seed" key overrides `seed`.
std::unique_ptr<Recommender> make_recommender(ModelKind kind, const nlohmann::json& params,
                                              std::uint64_t seed);

// The LightGCN settings a "lightgcn" params object describes.
LightGcnConfig lightgcn_config_from_json(const nlohmann::json& params, std::uint64_t seed);

struct Checkpoint {
    std::string name;
    std::unique_ptr<Recommender> model;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& name,
                     const Recommender& model, const InteractionLog& ids);
// The loaded model still needs update() with a snapshot before scoring.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace streamrec
