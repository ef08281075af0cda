#pragma once

#include "streamrec/graph_store.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace streamrec {

// `relevant` must be sorted ascending and non-empty.
double recall_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                   std::size_t n);
double precision_at_n(std::span<const std::uint32_t> ranked,
                      std::span<const std::uint32_t> relevant, std::size_t n);
// Binary-relevance nDCG with log2(rank + 1) discounts.
double ndcg_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                 std::size_t n);

struct RankedList {
    std::uint32_t user = 0;
    std::vector<std::uint32_t> items;
    std::vector<double> scores;
};

// Items in [0, scores.size()) minus `exclude` (sorted), ordered by score
// descending with ties broken by ascending index, truncated to `limit`.
RankedList rank_items(std::uint32_t user, std::span<const double> scores,
                      std::span<const std::uint32_t> exclude,
                      std::size_t limit = std::numeric_limits<std::size_t>::max());

enum class ColdStartMode { Exclude, Only, All };

struct EvalConfig {
    std::vector<int> cutoffs{20};
    ColdStartMode cold_start_mode = ColdStartMode::Exclude;
    bool keep_per_user = true;
};

// Partition of the item id space. Ids below `warm_end` were seen offline;
// ids in [warm_end, cold_end) are cold-start items.
struct ItemClasses {
    std::uint32_t warm_end = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t cold_end = std::numeric_limits<std::uint32_t>::max();
};

struct MetricsRecord {
    std::string step;
    std::map<int, double> recall;
    std::map<int, double> ndcg;
    std::map<int, double> precision;
    std::vector<std::uint32_t> users;  // evaluated users, ascending
    std::map<int, std::vector<double>> recall_per_user;
    std::map<int, std::vector<double>> ndcg_per_user;
    std::map<int, std::vector<double>> precision_per_user;
    std::size_t users_evaluated = 0;
    std::size_t unscoreable_relevant = 0;  // relevant items the model cannot rank

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

// Writes scores for items [0, out.size()).
using UserScorer = std::function<void(std::uint32_t user, std::span<double> out)>;

struct EvalTarget {
    const GraphSnapshot* exclusion = nullptr;  // items each user already interacted with
    std::span<const EdgeRecord> relevant_edges;
    ItemClasses classes;
};

// Ranks, for every user with at least one relevant item after cold-start
// filtering, the scoreable candidates minus already-seen items, and averages
// each metric over those users. `observer`, when set, sees every ranking.
MetricsRecord evaluate(const UserScorer& scorer, std::uint32_t scoreable_items,
                       const EvalTarget& target, const EvalConfig& cfg,
                       const std::function<void(const RankedList&)>& observer = {});

// Expected recall@N of a uniformly random ranking for the same evaluation:
// mean over users of min(N, C_u) / C_u with C_u the candidate count.
double random_ranking_recall(std::uint32_t scoreable_items, const EvalTarget& target,
                             const EvalConfig& cfg, int n);

}  // namespace streamrec
