#include "streamrec/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace streamrec {

namespace {

double penalty(const GraphSnapshot& g, std::uint32_t w, double beta) {
    const auto d = static_cast<double>(g.item_degree(w));
    return d == 0.0 ? 0.0 : 1.0 / std::pow(d, beta);
}

// Two walk steps from a user, restricted to items: only user -> user -> item
// paths end on an item.
std::vector<double> two_step_items(const GraphSnapshot& g, std::uint32_t start_user,
                                   const std::vector<double>& deg) {
    std::vector<double> out(g.num_items(), 0.0);
    const double p0 = 1.0 / deg[start_user];
    // user -> user -> item
    for (const auto f : g.friends_of(start_user)) {
        const double p1 = p0 / deg[f];
        for (const auto w : g.items_of(f)) out[w] += p1;
    }
    return out;
}

}  // namespace

std::vector<double> rp3b_scores(const GraphSnapshot& g, std::uint32_t user, const Rp3bConfig& cfg) {
    const std::uint32_t nu = g.num_users();
    std::vector<double> scores(g.num_items(), 0.0);
    if (user >= nu || g.node_degree(user) == 0) return scores;

    std::vector<double> deg(g.num_nodes());
    for (std::uint32_t v = 0; v < g.num_nodes(); ++v) deg[v] = static_cast<double>(g.node_degree(v));

    if (cfg.top_k == 0) {
        // step 1
        std::vector<double> p1(g.num_nodes(), 0.0);
        const double p0 = 1.0 / deg[user];
        for (const auto w : g.items_of(user)) p1[nu + w] += p0;
        for (const auto f : g.friends_of(user)) p1[f] += p0;
        // step 2: only users can reach items in one more step
        std::vector<double> p2(nu, 0.0);
        for (std::uint32_t v = 0; v < g.num_nodes(); ++v) {
            if (p1[v] == 0.0) continue;
            const double share = p1[v] / deg[v];
            if (v < nu) {
                for (const auto f : g.friends_of(v)) p2[f] += share;
            } else {
                for (const auto u : g.users_of(v - nu)) p2[u] += share;
            }
        }
        // step 3
        for (std::uint32_t u = 0; u < nu; ++u) {
            if (p2[u] == 0.0) continue;
            const double share = p2[u] / deg[u];
            for (const auto w : g.items_of(u)) scores[w] += share;
        }
        for (std::uint32_t w = 0; w < g.num_items(); ++w) scores[w] *= penalty(g, w, cfg.beta);
        return scores;
    }

    // Truncated form: score = sum_v P[u, v] * topk(P^2[v, items] * penalty).
    const double p0 = 1.0 / deg[user];
    auto accumulate_row = [&](std::vector<double> row) {
        for (std::uint32_t w = 0; w < row.size(); ++w) row[w] *= penalty(g, w, cfg.beta);
        std::vector<std::uint32_t> idx;
        for (std::uint32_t w = 0; w < row.size(); ++w) {
            if (row[w] != 0.0) idx.push_back(w);
        }
        const std::size_t keep = std::min(cfg.top_k, idx.size());
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                              return row[a] != row[b] ? row[a] > row[b] : a < b;
                          });
        for (std::size_t i = 0; i < keep; ++i) scores[idx[i]] += p0 * row[idx[i]];
    };
    for (const auto w : g.items_of(user)) {
        // item -> user -> item
        std::vector<double> row(g.num_items(), 0.0);
        const double p1 = 1.0 / deg[nu + w];
        for (const auto u : g.users_of(w)) {
            const double p2 = p1 / deg[u];
            for (const auto x : g.items_of(u)) row[x] += p2;
        }
        accumulate_row(std::move(row));
    }
    for (const auto f : g.friends_of(user)) accumulate_row(two_step_items(g, f, deg));
    return scores;
}

}  // namespace streamrec
