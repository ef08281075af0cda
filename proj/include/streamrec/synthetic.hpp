#pragma once

#include "streamrec/graph_store.hpp"

#include <cstdint>
#include <vector>

namespace streamrec {

// Users and items split into blocks; users interact only inside their block,
// with a Zipf-shaped popularity over the block's items. A fraction of items
// are held back until the streaming window opens.
struct PlantedConfig {
    std::uint32_t num_users = 200;
    std::uint32_t num_items = 300;
    std::uint32_t num_blocks = 2;
    std::uint32_t interactions_per_user = 22;
    double zipf_exponent = 1.5;
    // Every tenth popularity rank, starting at rank 2, is a late item.
    std::uint32_t cold_rank_stride = 10;
    std::uint32_t cold_rank_offset = 2;
    std::uint32_t friends_per_user = 2;
    Timestamp start = 1'600'000'000;
    Timestamp span = 100 * kSecondsPerDay;
    // Windows are cut at these shares of the user-item edge count.
    double offline_share = 0.5;
    double streaming_share = 0.3;
    std::size_t num_chunks = 3;
    std::uint64_t seed = 0;
};

struct PlantedGraph {
    InteractionLog log;
    WindowSpec windows;
    // Generator-side labels keyed by external id ("u<i>", "w<j>").
    std::vector<std::uint32_t> user_block;
    std::vector<std::uint32_t> item_block;
    std::vector<bool> late_item;
};

PlantedGraph make_planted_graph(const PlantedConfig& cfg);

}  // namespace streamrec
