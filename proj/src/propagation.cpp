#include "streamrec/propagation.hpp"

#include <cmath>

namespace streamrec {

bool EmbeddingTable::all_finite() const {
    for (const double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

// Pools rows of `source` into one row per target node; neighbors(t) lists the
// source rows of target t.
template <class Neighbors>
EmbeddingTable pool(const EmbeddingTable& source, std::size_t targets, CompositionKind f,
                    Neighbors neighbors) {
    EmbeddingTable out(targets, source.dim());
    for (std::size_t t = 0; t < targets; ++t) {
        const auto nbrs = neighbors(t);
        if (nbrs.empty()) continue;
        auto dst = out.row(t);
        for (const auto s : nbrs) axpy(1.0, source.row(s), dst);
        if (f == CompositionKind::Mean) {
            const double inv = 1.0 / static_cast<double>(nbrs.size());
            for (auto& v : dst) v *= inv;
        }
    }
    return out;
}

std::vector<double> degrees(const GraphSnapshot& g) {
    std::vector<double> d(g.num_nodes());
    for (std::uint32_t v = 0; v < g.num_nodes(); ++v) d[v] = static_cast<double>(g.node_degree(v));
    return d;
}

// Visits every (node, neighbor) pair of the heterogeneous graph in node order.
template <class Visit>
void for_each_neighbor(const GraphSnapshot& g, std::uint32_t v, Visit visit) {
    const std::uint32_t nu = g.num_users();
    if (v < nu) {
        for (const auto w : g.items_of(v)) visit(nu + w);
        for (const auto f : g.friends_of(v)) visit(f);
    } else {
        for (const auto u : g.users_of(v - nu)) visit(u);
    }
}

}  // namespace

EmbeddingTable compose_item_init(const EmbeddingTable& user_emb, const GraphSnapshot& graph,
                                 CompositionKind f) {
    if (user_emb.rows() != graph.num_users()) {
        throw std::invalid_argument("user table rows do not match graph user count");
    }
    return pool(user_emb, graph.num_items(), f, [&](std::size_t w) {
        return graph.users_of(static_cast<std::uint32_t>(w));
    });
}

EmbeddingTable compose_user_init(const EmbeddingTable& item_emb, const GraphSnapshot& graph,
                                 CompositionKind f) {
    if (item_emb.rows() != graph.num_items()) {
        throw std::invalid_argument("item table rows do not match graph item count");
    }
    return pool(item_emb, graph.num_users(), f, [&](std::size_t u) {
        return graph.items_of(static_cast<std::uint32_t>(u));
    });
}

void propagate_once(const EmbeddingTable& in, EmbeddingTable& out, const GraphSnapshot& graph,
                    NormalizationKind norm) {
    const auto deg = degrees(graph);
    out = EmbeddingTable(in.rows(), in.dim());
    for (std::uint32_t v = 0; v < graph.num_nodes(); ++v) {
        if (deg[v] == 0.0) continue;
        auto dst = out.row(v);
        if (norm == NormalizationKind::RowMean) {
            for_each_neighbor(graph, v, [&](std::uint32_t n) { axpy(1.0, in.row(n), dst); });
            const double inv = 1.0 / deg[v];
            for (auto& x : dst) x *= inv;
        } else {
            const double inv_sqrt_v = 1.0 / std::sqrt(deg[v]);
            for_each_neighbor(graph, v, [&](std::uint32_t n) {
                axpy(inv_sqrt_v / std::sqrt(deg[n]), in.row(n), dst);
            });
        }
    }
}

void propagate_once_transposed(const EmbeddingTable& in, EmbeddingTable& out,
                               const GraphSnapshot& graph, NormalizationKind norm) {
    if (norm == NormalizationKind::SymmetricSqrt) {
        propagate_once(in, out, graph, norm);
        return;
    }
    const auto deg = degrees(graph);
    out = EmbeddingTable(in.rows(), in.dim());
    for (std::uint32_t v = 0; v < graph.num_nodes(); ++v) {
        auto dst = out.row(v);
        for_each_neighbor(graph, v, [&](std::uint32_t n) { axpy(1.0 / deg[n], in.row(n), dst); });
    }
}

LayerStack propagate_layers(EmbeddingTable init_all, const GraphSnapshot& graph, int num_layers,
                            NormalizationKind norm) {
    if (init_all.rows() != graph.num_nodes()) {
        throw std::invalid_argument("layer-0 table must cover all users and items");
    }
    if (num_layers < 0) throw std::invalid_argument("negative layer count");
    LayerStack stack;
    stack.num_users = graph.num_users();
    stack.layers.reserve(static_cast<std::size_t>(num_layers) + 1);
    stack.layers.push_back(std::move(init_all));
    for (int l = 1; l <= num_layers; ++l) {
        EmbeddingTable next;
        propagate_once(stack.layers.back(), next, graph, norm);
        stack.layers.push_back(std::move(next));
    }
    return stack;
}

EmbeddingTable layer_average_all(const LayerStack& stack) {
    const auto& first = stack.layers.front();
    EmbeddingTable avg(first.rows(), first.dim());
    auto acc = avg.values();
    for (const auto& layer : stack.layers) axpy(1.0, layer.values(), acc);
    const double inv = 1.0 / static_cast<double>(stack.layers.size());
    for (auto& v : acc) v *= inv;
    return avg;
}

EmbeddingTable layer_average(const LayerStack& stack, NodeSet nodes) {
    const auto avg = layer_average_all(stack);
    if (nodes == NodeSet::Users) return avg.slice(0, stack.num_users);
    return avg.slice(stack.num_users, avg.rows() - stack.num_users);
}

EmbeddingTable initial_layer(const EmbeddingTable& explicit_emb, const GraphSnapshot& graph,
                             CompositionKind f, NodeSet explicit_side) {
    const std::size_t nu = graph.num_users();
    EmbeddingTable all(graph.num_nodes(), explicit_emb.dim());
    if (explicit_side == NodeSet::Users) {
        const auto items = compose_item_init(explicit_emb, graph, f);
        std::copy(explicit_emb.values().begin(), explicit_emb.values().end(), all.values().begin());
        std::copy(items.values().begin(), items.values().end(),
                  all.values().begin() + static_cast<std::ptrdiff_t>(nu * all.dim()));
    } else {
        const auto users = compose_user_init(explicit_emb, graph, f);
        std::copy(users.values().begin(), users.values().end(), all.values().begin());
        std::copy(explicit_emb.values().begin(), explicit_emb.values().end(),
                  all.values().begin() + static_cast<std::ptrdiff_t>(nu * all.dim()));
    }
    return all;
}

EmbeddingTable full_compose(const EmbeddingTable& explicit_emb, const GraphSnapshot& graph,
                            CompositionKind f, int num_layers, NormalizationKind norm,
                            NodeSet explicit_side) {
    auto stack = propagate_layers(initial_layer(explicit_emb, graph, f, explicit_side), graph,
                                  num_layers, norm);
    return layer_average(stack, explicit_side == NodeSet::Users ? NodeSet::Items : NodeSet::Users);
}

EmbeddingTable layer_average_adjoint(const EmbeddingTable& grad_avg_all, const GraphSnapshot& graph,
                                     int num_layers, NormalizationKind norm) {
    EmbeddingTable seed = grad_avg_all;
    const double inv = 1.0 / static_cast<double>(num_layers + 1);
    for (auto& v : seed.values()) v *= inv;

    // Horner form of sum_l (A^T)^l seed.
    EmbeddingTable acc = seed;
    EmbeddingTable next;
    for (int l = 0; l < num_layers; ++l) {
        propagate_once_transposed(acc, next, graph, norm);
        axpy(1.0, seed.values(), next.values());
        std::swap(acc, next);
    }
    return acc;
}

EmbeddingTable initial_layer_adjoint(const EmbeddingTable& grad_layer0, const GraphSnapshot& graph,
                                     CompositionKind f, NodeSet explicit_side) {
    const std::uint32_t nu = graph.num_users();
    if (explicit_side == NodeSet::Users) {
        EmbeddingTable d = grad_layer0.slice(0, nu);
        for (std::uint32_t w = 0; w < graph.num_items(); ++w) {
            const auto users = graph.users_of(w);
            if (users.empty()) continue;
            const double scale =
                f == CompositionKind::Mean ? 1.0 / static_cast<double>(users.size()) : 1.0;
            const auto g = grad_layer0.row(nu + w);
            for (const auto u : users) axpy(scale, g, d.row(u));
        }
        return d;
    }
    EmbeddingTable d = grad_layer0.slice(nu, graph.num_items());
    for (std::uint32_t u = 0; u < nu; ++u) {
        const auto items = graph.items_of(u);
        if (items.empty()) continue;
        const double scale =
            f == CompositionKind::Mean ? 1.0 / static_cast<double>(items.size()) : 1.0;
        const auto g = grad_layer0.row(u);
        for (const auto w : items) axpy(scale, g, d.row(w));
    }
    return d;
}

}  // namespace streamrec
