#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace streamrec {

using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;
// Window arithmetic uses fixed 30-day months.
inline constexpr Timestamp kSecondsPerMonth = 30 * kSecondsPerDay;

enum class NodeKind : std::uint8_t { User, Item };

struct NodeId {
    NodeKind kind = NodeKind::User;
    std::uint32_t index = 0;

    static constexpr NodeId user(std::uint32_t i) { return {NodeKind::User, i}; }
    static constexpr NodeId item(std::uint32_t i) { return {NodeKind::Item, i}; }

    friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;
};

// A user-item edge always has src = User, dst = Item. A user-user edge is
// stored with src.index < dst.index.
struct EdgeRecord {
    NodeId src;
    NodeId dst;
    Timestamp timestamp = 0;

    bool is_social() const { return dst.kind == NodeKind::User; }

    static EdgeRecord ui(std::uint32_t u, std::uint32_t w, Timestamp t) {
        return {NodeId::user(u), NodeId::item(w), t};
    }
    static EdgeRecord uu(std::uint32_t a, std::uint32_t b, Timestamp t) {
        if (b < a) std::swap(a, b);
        return {NodeId::user(a), NodeId::user(b), t};
    }

    // Endpoint identity, ignoring the timestamp.
    std::uint64_t key() const;

    friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

struct InteractionLog {
    std::vector<EdgeRecord> edges;  // non-decreasing timestamps
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::vector<std::string> user_ids;  // external id by dense index
    std::vector<std::string> item_ids;

    std::size_t num_social_edges() const;
    Timestamp first_timestamp() const;
    Timestamp last_timestamp() const;
};

// Collects raw interactions keyed by external ids and produces a normalized
// log: stable time order, duplicates collapsed to the earliest occurrence,
// dense ids in first-appearance order of the time-sorted stream.
class LogBuilder {
public:
    void add_ui(std::string user, std::string item, Timestamp t);
    void add_uu(std::string a, std::string b, Timestamp t);
    InteractionLog finish() &&;

private:
    struct Raw {
        std::string src;
        std::string dst;
        bool social;
        Timestamp t;
    };
    std::vector<Raw> raw_;
};

enum class LogFormat { Tsv };

// Lines: `src_id \t dst_id \t edge_type \t timestamp`, edge_type in {ui, uu}.
// Blank lines and lines starting with '#' are skipped.
InteractionLog parse_edge_log(std::istream& in);
InteractionLog load_edge_log(const std::filesystem::path& path, LogFormat format = LogFormat::Tsv);
void write_edge_log(const InteractionLog& log, std::ostream& out);

// Re-densify ids in first-appearance order, keeping only nodes touched by an
// edge. Edge order is preserved.
InteractionLog compact(const InteractionLog& log);

InteractionLog k_core_filter(const InteractionLog& log, std::uint32_t k);

struct Csr {
    std::vector<std::size_t> offsets{0};
    std::vector<std::uint32_t> targets;

    std::size_t rows() const { return offsets.size() - 1; }
    std::span<const std::uint32_t> row(std::size_t r) const {
        return {targets.data() + offsets[r], offsets[r + 1] - offsets[r]};
    }
    std::size_t row_size(std::size_t r) const { return offsets[r + 1] - offsets[r]; }

    // rows are sorted ascending and duplicate-free
    static Csr from_pairs(std::size_t num_rows,
                          std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);
};

// Immutable binary adjacency of the interaction graph at a cutoff. Node
// order for all-node tables is users first, then items.
class GraphSnapshot {
public:
    GraphSnapshot() = default;

    static GraphSnapshot from_edges(std::uint32_t num_users, std::uint32_t num_items,
                                    std::span<const EdgeRecord> edges, Timestamp cutoff);

    std::uint32_t num_users() const { return num_users_; }
    std::uint32_t num_items() const { return num_items_; }
    std::uint32_t num_nodes() const { return num_users_ + num_items_; }
    Timestamp cutoff() const { return cutoff_; }

    std::size_t num_ui_edges() const { return user_items_.targets.size(); }
    std::size_t num_uu_edges() const { return friends_.targets.size() / 2; }

    std::span<const std::uint32_t> items_of(std::uint32_t u) const { return user_items_.row(u); }
    std::span<const std::uint32_t> users_of(std::uint32_t w) const { return item_users_.row(w); }
    std::span<const std::uint32_t> friends_of(std::uint32_t u) const { return friends_.row(u); }

    std::size_t item_degree(std::uint32_t w) const { return item_users_.row_size(w); }
    std::size_t user_item_degree(std::uint32_t u) const { return user_items_.row_size(u); }
    std::size_t social_degree(std::uint32_t u) const { return friends_.row_size(u); }
    // Total undirected degree over both edge types.
    std::size_t degree(NodeId v) const;
    // Same, indexed over the users-then-items node order.
    std::size_t node_degree(std::uint32_t node) const;

    bool has_ui(std::uint32_t u, std::uint32_t w) const;

    // Canonical edge list: user-item edges ordered by (user, item), then
    // user-user edges ordered by (a, b). Timestamps are the cutoff.
    std::vector<EdgeRecord> edges() const;

    // Drops every item with index >= n together with its edges.
    GraphSnapshot restrict_items(std::uint32_t n) const;

    bool same_edges(const GraphSnapshot& other) const;

private:
    std::uint32_t num_users_ = 0;
    std::uint32_t num_items_ = 0;
    Timestamp cutoff_ = std::numeric_limits<Timestamp>::min();
    Csr user_items_;
    Csr item_users_;
    Csr friends_;  // symmetric
};

GraphSnapshot snapshot_at(const InteractionLog& log, Timestamp cutoff,
                          std::span<const EdgeRecord> exclude = {});

// Which node kind carries learned embeddings; nodes of that kind may not
// appear for the first time in a streamed chunk.
enum class ExplicitSide { Users, Items };

// New nodes of the composed kind extend the id space; chunk timestamps must be
// later than base.cutoff(). The resulting cutoff is `end` when given, else the
// latest chunk timestamp.
GraphSnapshot merge_increment(const GraphSnapshot& base, std::span<const EdgeRecord> chunk,
                              ExplicitSide explicit_side = ExplicitSide::Users,
                              std::optional<Timestamp> end = std::nullopt);

// Diagnostic dump with header `node_kind\tindex\tdegree`.
void write_degree_tsv(const GraphSnapshot& g, std::ostream& out);

struct ReplaySchedule {
    Timestamp start = 0;
    // Inclusive cutoffs: cutoffs[0] closes the offline window, cutoffs[k]
    // closes streaming chunk k.
    std::vector<Timestamp> cutoffs;
    Timestamp test_end = 0;  // inclusive
    double validation_fraction = 0.1;

    std::size_t num_chunks() const { return cutoffs.empty() ? 0 : cutoffs.size() - 1; }
    Timestamp offline_cutoff() const { return cutoffs.front(); }
    Timestamp streaming_end() const { return cutoffs.back(); }
};

struct WindowSpec {
    Timestamp offline = 0;
    Timestamp streaming = 0;
    Timestamp test = 0;
    std::size_t num_chunks = 1;
    double validation_fraction = 0.1;
};

// Windows start at the first timestamp. The test window is clipped to the
// end of the log; offline + streaming must fit inside the log span.
ReplaySchedule build_replay_schedule(const InteractionLog& log, const WindowSpec& windows);

// Last `fraction` of the given user-item edges by position (edges are time
// ordered), floor-rounded.
std::vector<EdgeRecord> last_fraction(std::span<const EdgeRecord> ui_edges, double fraction);

// A log split for the replay protocol. Ids are relabeled so that users and
// items observed offline come first; items first seen while streaming follow,
// then items first seen in the test window. Users never observed offline are
// dropped with their edges. User-user edges all join the offline graph.
struct ReplayData {
    InteractionLog log;
    ReplaySchedule schedule;
    std::uint32_t warm_items = 0;    // ids [0, warm_items) seen offline
    std::uint32_t streamed_end = 0;  // ids [warm_items, streamed_end) are cold-start items
    std::vector<EdgeRecord> train_edges;       // offline minus validation, incl. all user-user edges
    std::vector<EdgeRecord> validation_edges;  // user-item only
    std::vector<std::vector<EdgeRecord>> chunks;
    std::vector<EdgeRecord> test_edges;
    std::size_t dropped_edges = 0;

    std::size_t num_steps() const { return chunks.size() + 1; }
    Timestamp step_cutoff(std::size_t step) const;
    GraphSnapshot train_snapshot() const;
    GraphSnapshot offline_snapshot() const;
    // Offline graph merged with chunks 1..step.
    GraphSnapshot snapshot(std::size_t step) const;
    bool is_cold_start(std::uint32_t item) const {
        return item >= warm_items && item < streamed_end;
    }
    // All edges observed up to the step's cutoff, in time order.
    std::vector<EdgeRecord> edges_through(std::size_t step) const;
};

ReplayData materialize_replay(const InteractionLog& log, const ReplaySchedule& schedule);

}  // namespace streamrec
