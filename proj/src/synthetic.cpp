#include "streamrec/synthetic.hpp"

#include "streamrec/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace streamrec {

PlantedGraph make_planted_graph(const PlantedConfig& cfg) {
    if (cfg.num_blocks < 1 || cfg.num_users < cfg.num_blocks || cfg.num_items < cfg.num_blocks) {
        throw ConfigError("planted graph needs at least one user and item per block");
    }
    if (cfg.offline_share <= 0.0 || cfg.streaming_share <= 0.0 ||
        cfg.offline_share + cfg.streaming_share >= 1.0) {
        throw ConfigError("window shares must be positive and leave room for a test window");
    }
    std::mt19937_64 rng(cfg.seed);
    PlantedGraph out;

    // Items of each block in popularity order.
    std::vector<std::vector<std::uint32_t>> block_items(cfg.num_blocks);
    out.item_block.resize(cfg.num_items);
    out.late_item.assign(cfg.num_items, false);
    for (std::uint32_t w = 0; w < cfg.num_items; ++w) {
        out.item_block[w] = w % cfg.num_blocks;
        block_items[w % cfg.num_blocks].push_back(w);
    }
    std::vector<std::discrete_distribution<std::size_t>> popularity;
    for (auto& items : block_items) {
        std::shuffle(items.begin(), items.end(), rng);
        std::vector<double> weights;
        for (std::size_t r = 0; r < items.size(); ++r) {
            weights.push_back(std::pow(static_cast<double>(r + 1), -cfg.zipf_exponent));
            if (cfg.cold_rank_stride > 0 && r % cfg.cold_rank_stride == cfg.cold_rank_offset) {
                out.late_item[items[r]] = true;
            }
        }
        popularity.emplace_back(weights.begin(), weights.end());
    }

    out.user_block.resize(cfg.num_users);
    std::vector<std::vector<std::uint32_t>> block_users(cfg.num_blocks);
    for (std::uint32_t u = 0; u < cfg.num_users; ++u) {
        out.user_block[u] = u % cfg.num_blocks;
        block_users[u % cfg.num_blocks].push_back(u);
    }

    auto user_id = [](std::uint32_t u) { return "u" + std::to_string(u); };
    auto item_id = [](std::uint32_t w) { return "w" + std::to_string(w); };

    struct Draw {
        std::uint32_t user;
        std::uint32_t item;
    };
    std::vector<Draw> draws;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> friendships;
    for (std::uint32_t u = 0; u < cfg.num_users; ++u) {
        const auto& peers = block_users[out.user_block[u]];
        if (peers.size() > 1) {
            std::uniform_int_distribution<std::size_t> pick(0, peers.size() - 1);
            for (std::uint32_t f = 0; f < cfg.friends_per_user; ++f) {
                const auto v = peers[pick(rng)];
                if (v != u) friendships.emplace_back(u, v);
            }
        }
        const auto& items = block_items[out.user_block[u]];
        const auto want = std::min<std::size_t>(cfg.interactions_per_user, items.size());
        std::vector<bool> taken(items.size(), false);
        for (std::size_t n = 0; n < want;) {
            const auto r = popularity[out.user_block[u]](rng);
            if (taken[r]) continue;
            taken[r] = true;
            ++n;
            draws.push_back(Draw{u, items[r]});
        }
    }

    // Warm edges spread uniformly over the span; late edges start a little
    // after the point where the offline share of all edges is reached.
    const auto late_count = static_cast<double>(
        std::count_if(draws.begin(), draws.end(), [&](const Draw& d) { return out.late_item[d.item]; }));
    const auto total = static_cast<double>(draws.size());
    const double warm_share = (total - late_count) / total;
    if (warm_share <= cfg.offline_share) throw ConfigError("too many late edges for the offline share");
    const double late_share_of_span = std::min(0.98, cfg.offline_share / warm_share + 0.02);
    const auto late_start = static_cast<Timestamp>(late_share_of_span * static_cast<double>(cfg.span));
    std::uniform_int_distribution<Timestamp> any_time(1, cfg.span - 1);
    std::uniform_int_distribution<Timestamp> late_time(late_start, cfg.span - 1);

    LogBuilder builder;
    bool anchored = false;  // the first friendship pins the log start
    for (const auto& [u, v] : friendships) {
        builder.add_uu(user_id(u), user_id(v), cfg.start + (anchored ? any_time(rng) : 0));
        anchored = true;
    }
    for (const auto& d : draws) {
        Timestamp t = out.late_item[d.item] ? late_time(rng) : any_time(rng);
        if (!anchored && !out.late_item[d.item]) t = 0;
        anchored = anchored || !out.late_item[d.item];
        builder.add_ui(user_id(d.user), item_id(d.item), cfg.start + t);
    }
    out.log = std::move(builder).finish();

    std::vector<Timestamp> times;
    for (const auto& e : out.log.edges) {
        if (!e.is_social()) times.push_back(e.timestamp);
    }
    if (times.size() < 10) throw ConfigError("planted graph has too few user-item edges to split");
    auto at_share = [&](double share) {
        return times[static_cast<std::size_t>(share * static_cast<double>(times.size()))];
    };
    const Timestamp first = out.log.first_timestamp();
    const Timestamp offline_end = at_share(cfg.offline_share);
    const Timestamp streaming_end = at_share(cfg.offline_share + cfg.streaming_share);
    if (offline_end > cfg.start + late_start) {
        throw ConfigError("offline edge share reaches past the start of late items");
    }
    out.windows = {offline_end - first, streaming_end - offline_end,
                   out.log.last_timestamp() + 1 - streaming_end, cfg.num_chunks, 0.1};
    return out;
}

}  // namespace streamrec
