#pragma once

#include "streamrec/embedding.hpp"
#include "streamrec/graph_store.hpp"
#include "streamrec/propagation.hpp"
#include "streamrec/training.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace streamrec::lce {

enum class Direction {
    ItemCompositional,  // users explicit, items composed
    UserCompositional,  // items explicit, users composed
};

struct VariantFlags {
    bool single_embedding = false;  // score with the propagated explicit rows
    bool single_layer = false;      // forces one propagation layer
};

struct TrainConfig {
    int dim = 64;
    int num_layers = 3;
    CompositionKind composition = CompositionKind::Mean;
    NormalizationKind normalization = NormalizationKind::RowMean;
    int batch_size = 2048;
    double weight_decay = 1e-4;
    double learning_rate = 1e-3;
    int max_epochs = 800;
    int patience = 50;
    double target_fraction = 0.1;
    int negatives_per_positive = 1;
    std::uint64_t seed = 0;
    VariantFlags variant;
    Direction direction = Direction::ItemCompositional;

    int effective_layers() const { return variant.single_layer ? 1 : num_layers; }
    NodeSet explicit_side() const {
        return direction == Direction::ItemCompositional ? NodeSet::Users : NodeSet::Items;
    }
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// z_agg feeds composition; z_score scores pairs and is absent under the
// single-embedding variant.
struct LceParams {
    EmbeddingTable z_agg;
    std::optional<EmbeddingTable> z_score;
    Direction direction = Direction::ItemCompositional;

    std::size_t dim() const { return z_agg.dim(); }
    std::size_t num_explicit() const { return z_agg.rows(); }

    friend bool operator==(const LceParams&, const LceParams&) = default;
};

// Xavier-uniform tables on +-sqrt(6 / (rows + dim)).
LceParams init_params(const TrainConfig& cfg, std::uint32_t num_explicit_nodes);

ScoringTables scoring_tables(const LceParams& params, const GraphSnapshot& graph,
                             const TrainConfig& cfg);

// sigma(dot(user_vec, item_vec))
double score(std::span<const double> user_vec, std::span<const double> item_vec);

// Items by raw dot product descending, ties by ascending index, minus the
// sorted `exclude` set.
std::vector<std::uint32_t> score_all(const ScoringTables& tables, std::uint32_t user,
                                     std::span<const std::uint32_t> exclude);

struct ReconstructionSplit {
    GraphSnapshot input;
    std::vector<EdgeRecord> targets;
};

// ceil(rho * |user-item edges|) targets drawn uniformly without replacement;
// user-user edges always stay in the input graph.
ReconstructionSplit sample_reconstruction_split(const GraphSnapshot& train, double rho,
                                                std::mt19937_64& rng);

// -sum ln sigma(s(u, w+) - s(u, w-)) with embeddings composed over `input`.
double bpr_loss(const LceParams& params, const GraphSnapshot& input,
                std::span<const Triple> triples, const TrainConfig& cfg);

struct Gradient {
    EmbeddingTable d_agg;
    std::optional<EmbeddingTable> d_score;
    double loss = 0.0;
};

// Exact reverse-mode gradient of bpr_loss.
Gradient grad_bpr(const LceParams& params, const GraphSnapshot& input,
                  std::span<const Triple> triples, const TrainConfig& cfg);

struct FitResult {
    LceParams params;
    TrainingTrace trace;
};

// Offline batch training with per-epoch reconstruction splits, Adam with
// decoupled weight decay, and early stopping on validation recall@20.
// `validation` holds held-out user-item edges; ranking excludes `train` edges.
FitResult fit(const GraphSnapshot& train, std::span<const EdgeRecord> validation,
              const TrainConfig& cfg);

// Recomposes the implicit side over `new_graph` with the parameters fixed.
// Returns the composed side's table (items under ItemCompositional).
EmbeddingTable incremental_update(const LceParams& params, const GraphSnapshot& new_graph,
                                  const TrainConfig& cfg);

std::size_t param_count(const TrainConfig& cfg, std::size_t num_users, std::size_t num_items);
std::size_t lightgcn_param_count(std::size_t num_users, std::size_t num_items, std::size_t dim);

// Dimension for the flipped direction holding the parameter count fixed:
// max(1, round(|U| / |W| * d_item)), doubled in `larger` mode.
int flip_direction_dim(int d_item, std::size_t num_users, std::size_t num_items,
                       bool larger = false);

}  // namespace streamrec::lce
