#pragma once

#include "streamrec/embedding.hpp"
#include "streamrec/graph_store.hpp"

#include <vector>

namespace streamrec {

enum class CompositionKind { Mean, Sum };
enum class NormalizationKind { RowMean, SymmetricSqrt };
enum class NodeSet { Users, Items };

// Layers 0..L over all nodes, users first then items.
struct LayerStack {
    std::vector<EmbeddingTable> layers;
    std::uint32_t num_users = 0;

    std::size_t num_layers() const { return layers.size() - 1; }
};

// Initial item rows pooled from neighboring users' rows. Items without user
// neighbors get the zero vector.
EmbeddingTable compose_item_init(const EmbeddingTable& user_emb, const GraphSnapshot& graph,
                                 CompositionKind f);
// Mirror image for the flipped direction: users pooled from their items.
EmbeddingTable compose_user_init(const EmbeddingTable& item_emb, const GraphSnapshot& graph,
                                 CompositionKind f);

// One aggregation step out = A_hat * in over the full heterogeneous graph.
// Users aggregate over item and user neighbors, items over user neighbors; no
// self-loops. Zero-degree nodes produce zero rows.
void propagate_once(const EmbeddingTable& in, EmbeddingTable& out, const GraphSnapshot& graph,
                    NormalizationKind norm);
// out = A_hat^T * in.
void propagate_once_transposed(const EmbeddingTable& in, EmbeddingTable& out,
                               const GraphSnapshot& graph, NormalizationKind norm);

LayerStack propagate_layers(EmbeddingTable init_all, const GraphSnapshot& graph, int num_layers,
                            NormalizationKind norm);

// Unweighted mean of layers 0..L, restricted to one node set.
EmbeddingTable layer_average(const LayerStack& stack, NodeSet nodes);
// Same over all nodes.
EmbeddingTable layer_average_all(const LayerStack& stack);

// Explicit rows for `explicit_side`, composed rows for the other side.
EmbeddingTable initial_layer(const EmbeddingTable& explicit_emb, const GraphSnapshot& graph,
                             CompositionKind f, NodeSet explicit_side);

// Compose, propagate and average; returns the composed side's table.
EmbeddingTable full_compose(const EmbeddingTable& explicit_emb, const GraphSnapshot& graph,
                            CompositionKind f, int num_layers, NormalizationKind norm,
                            NodeSet explicit_side = NodeSet::Users);

// Reverse-mode pieces. Given dLoss/dAverage over all nodes, returns
// dLoss/dLayer0 = sum_{l=0..L} (A_hat^T)^l G / (L + 1).
EmbeddingTable layer_average_adjoint(const EmbeddingTable& grad_avg_all, const GraphSnapshot& graph,
                                     int num_layers, NormalizationKind norm);

// dLoss/dExplicit given dLoss/dLayer0 over all nodes.
EmbeddingTable initial_layer_adjoint(const EmbeddingTable& grad_layer0, const GraphSnapshot& graph,
                                     CompositionKind f, NodeSet explicit_side);

}  // namespace streamrec
