#pragma once

#include "streamrec/embedding.hpp"
#include "streamrec/graph_store.hpp"
#include "streamrec/propagation.hpp"
#include "streamrec/training.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace streamrec {

// ---- top popularity ------------------------------------------------------

struct PopModel {
    std::vector<std::size_t> counts;  // per item
};

PopModel pop_from_snapshot(const GraphSnapshot& g);
// Streaming rule: count the chunk's user-item edges, growing for new items.
void pop_add_edges(PopModel& model, std::span<const EdgeRecord> chunk);
std::vector<std::uint32_t> popu_rank(const PopModel& model, std::span<const std::uint32_t> exclude);

// ---- RP3beta -------------------------------------------------------------

struct Rp3bConfig {
    double beta = 0.0;
    // Per-node truncation of the two-step item block; 0 keeps every entry.
    std::size_t top_k = 0;
};

// Three steps of the row-stochastic walk over the heterogeneous adjacency
// from `user`, restricted to items and divided by deg(item)^beta. Isolated
// users and zero-degree items score zero.
std::vector<double> rp3b_scores(const GraphSnapshot& g, std::uint32_t user, const Rp3bConfig& cfg);

// ---- implicit ALS over the user x (item u user) matrix -------------------

struct AlsConfig {
    int dim = 64;
    double alpha = 40.0;
    double reg = 0.01;
    int iterations = 15;
    double init_std = 0.01;
    std::uint64_t seed = 0;
};

// Column factors are split into item columns and user (social) columns.
struct AlsModel {
    Eigen::MatrixXd users;   // |U| x d
    Eigen::MatrixXd items;   // |W| x d
    Eigen::MatrixXd social;  // |U| x d
};

struct AlsFit {
    AlsModel model;
    std::vector<double> objective;  // after every half-step
};

AlsFit als_fit(const GraphSnapshot& g, const AlsConfig& cfg);
// Confidence-weighted squared error plus ridge penalty.
double als_objective(const AlsModel& m, const GraphSnapshot& g, const AlsConfig& cfg);
// Re-solves every column factor against the current matrix with user
// factors held fixed. New items get factors from scratch.
void als_fold_in(AlsModel& m, const GraphSnapshot& g, const AlsConfig& cfg);
std::vector<double> als_scores(const AlsModel& m, std::uint32_t user);

// ---- SLIM ----------------------------------------------------------------

struct SlimConfig {
    double l1 = 0.1;
    double l2 = 1.0;
    double tolerance = 1e-4;  // max coefficient change per sweep
    int max_sweeps = 1000;
};

// Columns are items [0, num_items) followed by users.
struct SlimModel {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    // coefficients[j] holds the non-zero (source column, weight) pairs of
    // target column j, source ascending. Every column is fitted.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> coefficients;
    // by_source[k] holds (target item, weight) pairs; item targets only.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> by_source;

    std::uint32_t num_columns() const { return num_items + num_users; }
    std::size_t nonzeros() const;
    double weight(std::uint32_t source, std::uint32_t target) const;
};

struct SlimColumnFit {
    std::vector<std::pair<std::uint32_t, double>> weights;
    std::vector<double> objective;  // initial value, then after every sweep
    int sweeps = 0;
};

// Binary column view of the user x (item u user) matrix.
std::span<const std::uint32_t> slim_column(const GraphSnapshot& g, std::uint32_t column);

// Non-negative elastic net for one target column with its own coefficient
// pinned to zero, by cyclic coordinate descent.
SlimColumnFit slim_fit_column(const GraphSnapshot& g, std::uint32_t column, const SlimConfig& cfg);
double slim_column_objective(const GraphSnapshot& g, std::uint32_t column,
                             std::span<const std::pair<std::uint32_t, double>> weights,
                             const SlimConfig& cfg);
SlimModel slim_fit(const GraphSnapshot& g, const SlimConfig& cfg);

// Item scores for a binary user row given as item and friend columns. Items
// or users unknown to the model contribute nothing.
std::vector<double> slim_score_row(const SlimModel& m, std::span<const std::uint32_t> items,
                                   std::span<const std::uint32_t> friends);

// ---- LightGCN ------------------------------------------------------------

struct LightGcnConfig {
    int dim = 64;
    int num_layers = 3;
    NormalizationKind normalization = NormalizationKind::SymmetricSqrt;
    int batch_size = 2048;
    double weight_decay = 1e-4;
    double learning_rate = 1e-3;
    int max_epochs = 800;
    int patience = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LightGcnParams {
    EmbeddingTable users;
    EmbeddingTable items;

    friend bool operator==(const LightGcnParams&, const LightGcnParams&) = default;
};

struct FreezeMask {
    bool users = false;
    bool items = false;
};

struct LightGcnFit {
    LightGcnParams params;
    TrainingTrace trace;
};

LightGcnParams lightgcn_init(std::uint32_t num_users, std::uint32_t num_items, const LightGcnConfig& cfg);

// Layer-averaged vectors over `g`. Items of `g` beyond the trained table
// enter propagation as zero rows and are not returned.
ScoringTables lightgcn_tables(const LightGcnParams& p, const GraphSnapshot& g, const LightGcnConfig& cfg);

double lightgcn_bpr_loss(const LightGcnParams& p, const GraphSnapshot& g,
                         std::span<const Triple> triples, const LightGcnConfig& cfg);

struct LightGcnGradient {
    EmbeddingTable d_users;
    EmbeddingTable d_items;
    double loss = 0.0;
};

LightGcnGradient lightgcn_grad(const LightGcnParams& p, const GraphSnapshot& g,
                               std::span<const Triple> triples, const LightGcnConfig& cfg);

// Every training user-item edge is a positive each epoch. `init` warm-starts
// the tables; frozen tables are never touched.
LightGcnFit lightgcn_fit(const GraphSnapshot& train, std::span<const EdgeRecord> validation,
                         const LightGcnConfig& cfg, const LightGcnParams* init = nullptr,
                         FreezeMask freeze = {}, bool evaluate_initial = false);

}  // namespace streamrec
