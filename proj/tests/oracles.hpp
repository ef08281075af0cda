#pragma once

// Independent dense reference implementations used by the unit and
// acceptance tests. Nothing here calls the sparse kernels under test.

#include "streamrec/embedding.hpp"
#include "streamrec/graph_store.hpp"
#include "streamrec/lce.hpp"
#include "streamrec/propagation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

namespace oracle {

using streamrec::CompositionKind;
using streamrec::EdgeRecord;
using streamrec::EmbeddingTable;
using streamrec::GraphSnapshot;
using streamrec::NodeSet;
using streamrec::NormalizationKind;

struct RandomGraphShape {
    std::uint32_t max_users = 6;
    std::uint32_t max_items = 8;
    double ui_density = 0.4;
    double uu_density = 0.2;
};

inline std::vector<EdgeRecord> random_edges(std::mt19937_64& rng, std::uint32_t nu,
                                            std::uint32_t nw, double ui_p, double uu_p) {
    std::bernoulli_distribution ui(ui_p);
    std::bernoulli_distribution uu(uu_p);
    std::vector<EdgeRecord> edges;
    for (std::uint32_t u = 0; u < nu; ++u) {
        for (std::uint32_t w = 0; w < nw; ++w) {
            if (ui(rng)) edges.push_back(EdgeRecord::ui(u, w, 0));
        }
        for (std::uint32_t v = u + 1; v < nu; ++v) {
            if (uu(rng)) edges.push_back(EdgeRecord::uu(u, v, 0));
        }
    }
    return edges;
}

inline GraphSnapshot random_graph(std::mt19937_64& rng, const RandomGraphShape& shape = {}) {
    std::uniform_int_distribution<std::uint32_t> nu_d(1, shape.max_users);
    std::uniform_int_distribution<std::uint32_t> nw_d(1, shape.max_items);
    const auto nu = nu_d(rng);
    const auto nw = nw_d(rng);
    const auto edges = random_edges(rng, nu, nw, shape.ui_density, shape.uu_density);
    return GraphSnapshot::from_edges(nu, nw, edges, 0);
}

inline EmbeddingTable random_table(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    EmbeddingTable t(rows, dim);
    for (auto& v : t.values()) v = n(rng);
    return t;
}

inline Eigen::MatrixXd to_dense(const EmbeddingTable& t) {
    Eigen::MatrixXd m(t.rows(), t.dim());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.dim(); ++c) m(r, c) = t(r, c);
    }
    return m;
}

// Users first, then items, built from the canonical edge list.
inline Eigen::MatrixXd adjacency(const GraphSnapshot& g) {
    const auto n = g.num_nodes();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) {
        const auto s = e.src.index;
        const auto t = e.is_social() ? e.dst.index : g.num_users() + e.dst.index;
        a(s, t) = 1.0;
        a(t, s) = 1.0;
    }
    return a;
}

inline Eigen::MatrixXd normalized_adjacency(const GraphSnapshot& g, NormalizationKind norm) {
    Eigen::MatrixXd a = adjacency(g);
    const Eigen::VectorXd deg = a.rowwise().sum();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) == 0.0) continue;
            a(i, j) /= norm == NormalizationKind::RowMean ? deg(i) : std::sqrt(deg(i) * deg(j));
        }
    }
    return a;
}

// Layer 0 over all nodes: explicit rows as given, the other side pooled from
// its bipartite neighbors.
inline Eigen::MatrixXd initial_layer(const Eigen::MatrixXd& explicit_rows, const GraphSnapshot& g,
                                     CompositionKind f, NodeSet explicit_side) {
    const Eigen::MatrixXd a = adjacency(g);
    const auto nu = g.num_users();
    const auto nw = g.num_items();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(g.num_nodes(), explicit_rows.cols());
    // bipartite block: users x items
    const Eigen::MatrixXd b = a.block(0, nu, nu, nw);
    Eigen::MatrixXd pool_weights = explicit_side == NodeSet::Users ? Eigen::MatrixXd(b.transpose())
                                                                   : b;
    if (f == CompositionKind::Mean) {
        for (Eigen::Index r = 0; r < pool_weights.rows(); ++r) {
            const double s = pool_weights.row(r).sum();
            if (s > 0) pool_weights.row(r) /= s;
        }
    }
    if (explicit_side == NodeSet::Users) {
        x.topRows(nu) = explicit_rows;
        x.bottomRows(nw) = pool_weights * explicit_rows;
    } else {
        x.bottomRows(nw) = explicit_rows;
        x.topRows(nu) = pool_weights * explicit_rows;
    }
    return x;
}

// mean_{l=0..L} A_hat^l X0 over all nodes.
inline Eigen::MatrixXd layer_average(const Eigen::MatrixXd& x0, const GraphSnapshot& g, int layers,
                                     NormalizationKind norm) {
    const Eigen::MatrixXd a = normalized_adjacency(g, norm);
    Eigen::MatrixXd x = x0;
    Eigen::MatrixXd acc = x0;
    for (int l = 0; l < layers; ++l) {
        x = a * x;
        acc += x;
    }
    return acc / static_cast<double>(layers + 1);
}

inline Eigen::MatrixXd full_compose(const EmbeddingTable& explicit_emb, const GraphSnapshot& g,
                                    CompositionKind f, int layers, NormalizationKind norm,
                                    NodeSet explicit_side) {
    const auto avg = layer_average(initial_layer(to_dense(explicit_emb), g, f, explicit_side), g,
                                   layers, norm);
    return explicit_side == NodeSet::Users ? Eigen::MatrixXd(avg.bottomRows(g.num_items()))
                                           : Eigen::MatrixXd(avg.topRows(g.num_users()));
}

// Pairwise BPR loss with every vector built by the dense pipeline.
inline double bpr_loss(const streamrec::lce::LceParams& p, const GraphSnapshot& g,
                       std::span<const streamrec::Triple> triples,
                       const streamrec::lce::TrainConfig& cfg) {
    const auto side = cfg.explicit_side();
    const auto avg = layer_average(initial_layer(to_dense(p.z_agg), g, cfg.composition, side), g,
                                   cfg.effective_layers(), cfg.normalization);
    Eigen::MatrixXd users = avg.topRows(g.num_users());
    Eigen::MatrixXd items = avg.bottomRows(g.num_items());
    if (p.z_score) (side == NodeSet::Users ? users : items) = to_dense(*p.z_score);
    double loss = 0.0;
    for (const auto& t : triples) {
        const double diff = users.row(t.user).dot(items.row(t.pos) - items.row(t.neg));
        loss += std::log1p(std::exp(-diff));
    }
    return loss;
}

// Central differences of the dense loss over every parameter entry.
struct NumericGradient {
    EmbeddingTable d_agg;
    std::optional<EmbeddingTable> d_score;
};

inline NumericGradient finite_difference(streamrec::lce::LceParams p, const GraphSnapshot& g,
                                         std::span<const streamrec::Triple> triples,
                                         const streamrec::lce::TrainConfig& cfg, double h) {
    auto central = [&](EmbeddingTable& table) {
        EmbeddingTable out(table.rows(), table.dim());
        for (std::size_t i = 0; i < table.values().size(); ++i) {
            const double keep = table.values()[i];
            table.values()[i] = keep + h;
            const double up = oracle::bpr_loss(p, g, triples, cfg);
            table.values()[i] = keep - h;
            const double down = oracle::bpr_loss(p, g, triples, cfg);
            table.values()[i] = keep;
            out.values()[i] = (up - down) / (2.0 * h);
        }
        return out;
    };
    NumericGradient n;
    n.d_agg = central(p.z_agg);
    if (p.z_score) n.d_score = central(*p.z_score);
    return n;
}

// Largest per-coordinate |a - n| / max(|a|, |n|, floor).
inline double max_relative_error(const EmbeddingTable& a, const EmbeddingTable& n, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        const double x = a.values()[i];
        const double y = n.values()[i];
        worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
    }
    return worst;
}

// Dense P^3 restricted to item columns, divided by deg(item)^beta.
inline std::vector<double> rp3b(const GraphSnapshot& g, std::uint32_t user, double beta) {
    Eigen::MatrixXd p = adjacency(g);
    const Eigen::VectorXd deg = p.rowwise().sum();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if (deg(i) > 0) p.row(i) /= deg(i);
    }
    const Eigen::MatrixXd p3 = p * p * p;
    std::vector<double> out(g.num_items(), 0.0);
    for (std::uint32_t w = 0; w < g.num_items(); ++w) {
        const auto col = g.num_users() + w;
        if (deg(col) == 0) continue;
        out[w] = p3(user, col) / std::pow(deg(col), beta);
    }
    return out;
}

// Metric definitions by direct counting over the top-n prefix.
inline double recall(std::span<const std::uint32_t> ranked, const std::set<std::uint32_t>& rel,
                     std::size_t n) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) hits += rel.count(ranked[i]);
    return static_cast<double>(hits) / static_cast<double>(rel.size());
}

inline double precision(std::span<const std::uint32_t> ranked, const std::set<std::uint32_t>& rel,
                        std::size_t n) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) hits += rel.count(ranked[i]);
    return static_cast<double>(hits) / static_cast<double>(n);
}

inline double ndcg(std::span<const std::uint32_t> ranked, const std::set<std::uint32_t>& rel,
                   std::size_t n) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) {
        if (rel.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(n, rel.size()); ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const EmbeddingTable& b) {
    return (a - to_dense(b)).cwiseAbs().maxCoeff();
}

}  // namespace oracle
