#include "streamrec/metrics.hpp"

#include "streamrec/error.hpp"

#include <algorithm>
#include <cmath>

namespace streamrec {

namespace {

bool contains(std::span<const std::uint32_t> sorted, std::uint32_t x) {
    return std::binary_search(sorted.begin(), sorted.end(), x);
}

std::size_t hits(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                 std::size_t n) {
    const std::size_t top = std::min(n, ranked.size());
    std::size_t h = 0;
    for (std::size_t i = 0; i < top; ++i) h += contains(relevant, ranked[i]) ? 1 : 0;
    return h;
}

}  // namespace

double recall_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                   std::size_t n) {
    return static_cast<double>(hits(ranked, relevant, n)) / static_cast<double>(relevant.size());
}

double precision_at_n(std::span<const std::uint32_t> ranked,
                      std::span<const std::uint32_t> relevant, std::size_t n) {
    return static_cast<double>(hits(ranked, relevant, n)) / static_cast<double>(n);
}

double ndcg_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                 std::size_t n) {
    double dcg = 0.0;
    const std::size_t top = std::min(n, ranked.size());
    for (std::size_t i = 0; i < top; ++i) {
        if (contains(relevant, ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    double idcg = 0.0;
    const std::size_t ideal = std::min(n, relevant.size());
    for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

RankedList rank_items(std::uint32_t user, std::span<const double> scores,
                      std::span<const std::uint32_t> exclude, std::size_t limit) {
    std::vector<std::uint32_t> candidates;
    candidates.reserve(scores.size());
    auto ex = exclude.begin();
    for (std::uint32_t w = 0; w < scores.size(); ++w) {
        while (ex != exclude.end() && *ex < w) ++ex;
        if (ex != exclude.end() && *ex == w) continue;
        candidates.push_back(w);
    }
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    const std::size_t keep = std::min(limit, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);
    candidates.resize(keep);

    RankedList out;
    out.user = user;
    out.scores.reserve(keep);
    for (const auto w : candidates) out.scores.push_back(scores[w]);
    out.items = std::move(candidates);
    return out;
}

namespace {

bool keep_relevant(std::uint32_t w, const ItemClasses& classes, ColdStartMode mode) {
    switch (mode) {
    case ColdStartMode::Exclude: return w < classes.warm_end;
    case ColdStartMode::Only: return w >= classes.warm_end && w < classes.cold_end;
    case ColdStartMode::All: return true;
    }
    return true;
}

// Sorted relevant item lists per user, keyed by ascending user id.
std::map<std::uint32_t, std::vector<std::uint32_t>> relevant_by_user(const EvalTarget& target,
                                                                     ColdStartMode mode) {
    std::map<std::uint32_t, std::vector<std::uint32_t>> by_user;
    for (const auto& e : target.relevant_edges) {
        if (e.is_social()) continue;
        if (!keep_relevant(e.dst.index, target.classes, mode)) continue;
        by_user[e.src.index].push_back(e.dst.index);
    }
    for (auto& [u, items] : by_user) {
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
    }
    return by_user;
}

std::span<const std::uint32_t> seen_items(const GraphSnapshot* g, std::uint32_t u) {
    if (g == nullptr || u >= g->num_users()) return {};
    return g->items_of(u);
}

std::uint32_t candidate_end(std::uint32_t scoreable, const EvalTarget& target, ColdStartMode mode) {
    return mode == ColdStartMode::Exclude ? std::min(scoreable, target.classes.warm_end) : scoreable;
}

}  // namespace

MetricsRecord evaluate(const UserScorer& scorer, std::uint32_t scoreable_items,
                       const EvalTarget& target, const EvalConfig& cfg,
                       const std::function<void(const RankedList&)>& observer) {
    if (cfg.cutoffs.empty()) throw ConfigError("evaluation needs at least one cutoff");
    for (const int n : cfg.cutoffs) {
        if (n < 1) throw ConfigError("metric cutoff must be >= 1");
    }
    const auto by_user = relevant_by_user(target, cfg.cold_start_mode);
    if (by_user.empty()) throw EmptyEvaluationError("no user has a relevant item to evaluate");

    const std::uint32_t cand_end = candidate_end(scoreable_items, target, cfg.cold_start_mode);
    const auto max_n = static_cast<std::size_t>(*std::max_element(cfg.cutoffs.begin(), cfg.cutoffs.end()));

    MetricsRecord rec;
    std::vector<double> scores(scoreable_items);
    for (const auto& [u, relevant] : by_user) {
        scorer(u, scores);
        const auto ranked = rank_items(u, std::span<const double>(scores).first(cand_end),
                                       seen_items(target.exclusion, u), max_n);
        if (observer) observer(ranked);
        for (const auto w : relevant) rec.unscoreable_relevant += w >= cand_end ? 1 : 0;

        rec.users.push_back(u);
        for (const int n : cfg.cutoffs) {
            const auto nn = static_cast<std::size_t>(n);
            rec.recall_per_user[n].push_back(recall_at_n(ranked.items, relevant, nn));
            rec.ndcg_per_user[n].push_back(ndcg_at_n(ranked.items, relevant, nn));
            rec.precision_per_user[n].push_back(precision_at_n(ranked.items, relevant, nn));
        }
    }

    rec.users_evaluated = rec.users.size();
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    for (const int n : cfg.cutoffs) {
        rec.recall[n] = mean(rec.recall_per_user[n]);
        rec.ndcg[n] = mean(rec.ndcg_per_user[n]);
        rec.precision[n] = mean(rec.precision_per_user[n]);
    }
    if (!cfg.keep_per_user) {
        rec.recall_per_user.clear();
        rec.ndcg_per_user.clear();
        rec.precision_per_user.clear();
    }
    return rec;
}

double random_ranking_recall(std::uint32_t scoreable_items, const EvalTarget& target,
                             const EvalConfig& cfg, int n) {
    const auto by_user = relevant_by_user(target, cfg.cold_start_mode);
    if (by_user.empty()) throw EmptyEvaluationError("no user has a relevant item to evaluate");
    const std::uint32_t cand_end = candidate_end(scoreable_items, target, cfg.cold_start_mode);

    double total = 0.0;
    for (const auto& [u, relevant] : by_user) {
        const auto seen = seen_items(target.exclusion, u);
        const auto seen_below = static_cast<std::size_t>(
            std::lower_bound(seen.begin(), seen.end(), cand_end) - seen.begin());
        const double candidates = static_cast<double>(cand_end - seen_below);
        std::size_t rankable = 0;
        for (const auto w : relevant) {
            if (w < cand_end && !std::binary_search(seen.begin(), seen.end(), w)) ++rankable;
        }
        if (candidates > 0) {
            total += static_cast<double>(rankable) *
                     std::min(static_cast<double>(n), candidates) / candidates /
                     static_cast<double>(relevant.size());
        }
    }
    return total / static_cast<double>(by_user.size());
}

}  // namespace streamrec
