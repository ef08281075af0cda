#include "streamrec/baselines.hpp"
#include "streamrec/metrics.hpp"

namespace streamrec {

PopModel pop_from_snapshot(const GraphSnapshot& g) {
    PopModel m;
    m.counts.resize(g.num_items());
    for (std::uint32_t w = 0; w < g.num_items(); ++w) m.counts[w] = g.item_degree(w);
    return m;
}

void pop_add_edges(PopModel& model, std::span<const EdgeRecord> chunk) {
    for (const auto& e : chunk) {
        if (e.is_social()) continue;
        if (e.dst.index >= model.counts.size()) model.counts.resize(e.dst.index + 1, 0);
        ++model.counts[e.dst.index];
    }
}

std::vector<std::uint32_t> popu_rank(const PopModel& model, std::span<const std::uint32_t> exclude) {
    std::vector<double> scores(model.counts.begin(), model.counts.end());
    return rank_items(0, scores, exclude).items;
}

}  // namespace streamrec
