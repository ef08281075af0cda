#include "streamrec/graph_store.hpp"

#include "streamrec/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_set>

namespace streamrec {

const char* category_name(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::Parse: return "parse error";
    case ErrorCategory::RejectedEdge: return "rejected edge";
    case ErrorCategory::Schedule: return "schedule error";
    case ErrorCategory::InductiveViolation: return "inductive violation";
    case ErrorCategory::Config: return "config error";
    case ErrorCategory::EmptyEvaluation: return "empty evaluation";
    case ErrorCategory::DegenerateVariance: return "degenerate variance";
    case ErrorCategory::Checkpoint: return "checkpoint error";
    case ErrorCategory::Io: return "io error";
    }
    return "error";
}

std::uint64_t EdgeRecord::key() const {
    const std::uint64_t social = is_social() ? 1ULL << 63 : 0;
    return social | (std::uint64_t{src.index} << 32) | dst.index;
}

std::size_t InteractionLog::num_social_edges() const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [](const EdgeRecord& e) { return e.is_social(); }));
}

Timestamp InteractionLog::first_timestamp() const {
    return edges.empty() ? 0 : edges.front().timestamp;
}

Timestamp InteractionLog::last_timestamp() const {
    return edges.empty() ? 0 : edges.back().timestamp;
}

void LogBuilder::add_ui(std::string user, std::string item, Timestamp t) {
    raw_.push_back({std::move(user), std::move(item), false, t});
}

void LogBuilder::add_uu(std::string a, std::string b, Timestamp t) {
    raw_.push_back({std::move(a), std::move(b), true, t});
}

namespace {

std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& map,
                     std::vector<std::string>& names, const std::string& id) {
    auto [it, inserted] = map.try_emplace(id, static_cast<std::uint32_t>(names.size()));
    if (inserted) names.push_back(id);
    return it->second;
}

}  // namespace

InteractionLog LogBuilder::finish() && {
    std::stable_sort(raw_.begin(), raw_.end(),
                     [](const Raw& a, const Raw& b) { return a.t < b.t; });

    InteractionLog log;
    std::unordered_map<std::string, std::uint32_t> users;
    std::unordered_map<std::string, std::uint32_t> items;
    std::unordered_set<std::uint64_t> seen;
    for (const Raw& r : raw_) {
        if (r.social && r.src == r.dst) continue;  // self-loops carry no signal
        const std::uint32_t a = intern(users, log.user_ids, r.src);
        EdgeRecord e;
        if (r.social) {
            e = EdgeRecord::uu(a, intern(users, log.user_ids, r.dst), r.t);
        } else {
            e = EdgeRecord::ui(a, intern(items, log.item_ids, r.dst), r.t);
        }
        if (seen.insert(e.key()).second) log.edges.push_back(e);
    }
    log.num_users = static_cast<std::uint32_t>(log.user_ids.size());
    log.num_items = static_cast<std::uint32_t>(log.item_ids.size());
    return log;
}

InteractionLog parse_edge_log(std::istream& in) {
    LogBuilder builder;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string_view> fields;
        std::string_view rest(line);
        while (true) {
            const auto tab = rest.find('\t');
            fields.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (fields.size() != 4) {
            throw ParseError(line_no, "expected 4 tab-separated fields, got " +
                                          std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) throw ParseError(line_no, "empty node id");

        Timestamp t = 0;
        const auto ts = fields[3];
        const auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
        if (ec != std::errc{} || ptr != ts.data() + ts.size()) {
            throw ParseError(line_no, "bad timestamp '" + std::string(ts) + "'");
        }
        if (t < 0) throw ParseError(line_no, "negative timestamp");

        const auto type = fields[2];
        if (type == "ui") {
            builder.add_ui(std::string(fields[0]), std::string(fields[1]), t);
        } else if (type == "uu") {
            builder.add_uu(std::string(fields[0]), std::string(fields[1]), t);
        } else if (type == "ii") {
            throw RejectedEdgeError(line_no, "item-item edges are not supported");
        } else {
            throw ParseError(line_no, "unknown edge type '" + std::string(type) + "'");
        }
    }
    return std::move(builder).finish();
}

InteractionLog load_edge_log(const std::filesystem::path& path, LogFormat format) {
    (void)format;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open edge log " + path.string());
    return parse_edge_log(in);
}

void write_edge_log(const InteractionLog& log, std::ostream& out) {
    for (const auto& e : log.edges) {
        if (e.is_social()) {
            out << log.user_ids[e.src.index] << '\t' << log.user_ids[e.dst.index] << "\tuu\t";
        } else {
            out << log.user_ids[e.src.index] << '\t' << log.item_ids[e.dst.index] << "\tui\t";
        }
        out << e.timestamp << '\n';
    }
}

InteractionLog compact(const InteractionLog& log) {
    constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> user_map(log.num_users, kUnset);
    std::vector<std::uint32_t> item_map(log.num_items, kUnset);

    InteractionLog out;
    auto map_user = [&](std::uint32_t u) {
        if (user_map[u] == kUnset) {
            user_map[u] = out.num_users++;
            out.user_ids.push_back(u < log.user_ids.size() ? log.user_ids[u] : std::to_string(u));
        }
        return user_map[u];
    };
    auto map_item = [&](std::uint32_t w) {
        if (item_map[w] == kUnset) {
            item_map[w] = out.num_items++;
            out.item_ids.push_back(w < log.item_ids.size() ? log.item_ids[w] : std::to_string(w));
        }
        return item_map[w];
    };

    out.edges.reserve(log.edges.size());
    for (const auto& e : log.edges) {
        const std::uint32_t a = map_user(e.src.index);
        if (e.is_social()) {
            out.edges.push_back(EdgeRecord::uu(a, map_user(e.dst.index), e.timestamp));
        } else {
            out.edges.push_back(EdgeRecord::ui(a, map_item(e.dst.index), e.timestamp));
        }
    }
    return out;
}

InteractionLog k_core_filter(const InteractionLog& log, std::uint32_t k) {
    const std::size_t nu = log.num_users;
    const std::size_t n = nu + log.num_items;
    auto node_of = [&](NodeId v) {
        return v.kind == NodeKind::User ? v.index : nu + v.index;
    };

    std::vector<std::size_t> degree(n, 0);
    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t i = 0; i < log.edges.size(); ++i) {
        const auto a = node_of(log.edges[i].src);
        const auto b = node_of(log.edges[i].dst);
        ++degree[a];
        ++degree[b];
        incident[a].push_back(i);
        incident[b].push_back(i);
    }

    std::vector<char> node_alive(n, 1);
    std::vector<char> edge_alive(log.edges.size(), 1);
    std::queue<std::size_t> doomed;
    for (std::size_t v = 0; v < n; ++v) {
        if (degree[v] < k) {
            node_alive[v] = 0;
            doomed.push(v);
        }
    }
    while (!doomed.empty()) {
        const auto v = doomed.front();
        doomed.pop();
        for (const auto i : incident[v]) {
            if (!edge_alive[i]) continue;
            edge_alive[i] = 0;
            const auto a = node_of(log.edges[i].src);
            const auto other = a == v ? node_of(log.edges[i].dst) : a;
            if (node_alive[other] && --degree[other] < k) {
                node_alive[other] = 0;
                doomed.push(other);
            }
        }
    }

    InteractionLog kept;
    kept.num_users = log.num_users;
    kept.num_items = log.num_items;
    kept.user_ids = log.user_ids;
    kept.item_ids = log.item_ids;
    for (std::size_t i = 0; i < log.edges.size(); ++i) {
        if (edge_alive[i]) kept.edges.push_back(log.edges[i]);
    }
    return compact(kept);
}

Csr Csr::from_pairs(std::size_t num_rows,
                    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    Csr csr;
    csr.offsets.assign(num_rows + 1, 0);
    csr.targets.reserve(pairs.size());
    for (const auto& [r, c] : pairs) {
        ++csr.offsets[r + 1];
        csr.targets.push_back(c);
    }
    for (std::size_t r = 0; r < num_rows; ++r) csr.offsets[r + 1] += csr.offsets[r];
    return csr;
}

GraphSnapshot GraphSnapshot::from_edges(std::uint32_t num_users, std::uint32_t num_items,
                                        std::span<const EdgeRecord> edges, Timestamp cutoff) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ui;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> iu;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> uu;
    for (const auto& e : edges) {
        if (e.src.kind != NodeKind::User) throw std::invalid_argument("edge source must be a user");
        if (e.src.index >= num_users) throw std::out_of_range("user index out of range");
        if (e.is_social()) {
            if (e.dst.index >= num_users) throw std::out_of_range("user index out of range");
            if (e.src.index == e.dst.index) continue;
            uu.emplace_back(e.src.index, e.dst.index);
            uu.emplace_back(e.dst.index, e.src.index);
        } else {
            if (e.dst.index >= num_items) throw std::out_of_range("item index out of range");
            ui.emplace_back(e.src.index, e.dst.index);
            iu.emplace_back(e.dst.index, e.src.index);
        }
    }
    GraphSnapshot g;
    g.num_users_ = num_users;
    g.num_items_ = num_items;
    g.cutoff_ = cutoff;
    g.user_items_ = Csr::from_pairs(num_users, std::move(ui));
    g.item_users_ = Csr::from_pairs(num_items, std::move(iu));
    g.friends_ = Csr::from_pairs(num_users, std::move(uu));
    return g;
}

std::size_t GraphSnapshot::degree(NodeId v) const {
    if (v.kind == NodeKind::User) return user_item_degree(v.index) + social_degree(v.index);
    return item_degree(v.index);
}

std::size_t GraphSnapshot::node_degree(std::uint32_t node) const {
    return node < num_users_ ? degree(NodeId::user(node)) : degree(NodeId::item(node - num_users_));
}

bool GraphSnapshot::has_ui(std::uint32_t u, std::uint32_t w) const {
    if (u >= num_users_) return false;
    const auto row = items_of(u);
    return std::binary_search(row.begin(), row.end(), w);
}

std::vector<EdgeRecord> GraphSnapshot::edges() const {
    std::vector<EdgeRecord> out;
    out.reserve(num_ui_edges() + num_uu_edges());
    for (std::uint32_t u = 0; u < num_users_; ++u) {
        for (const auto w : items_of(u)) out.push_back(EdgeRecord::ui(u, w, cutoff_));
    }
    for (std::uint32_t u = 0; u < num_users_; ++u) {
        for (const auto v : friends_of(u)) {
            if (u < v) out.push_back(EdgeRecord::uu(u, v, cutoff_));
        }
    }
    return out;
}

GraphSnapshot GraphSnapshot::restrict_items(std::uint32_t n) const {
    if (n >= num_items_) return *this;
    auto all = edges();
    std::erase_if(all, [n](const EdgeRecord& e) { return !e.is_social() && e.dst.index >= n; });
    return from_edges(num_users_, n, all, cutoff_);
}

bool GraphSnapshot::same_edges(const GraphSnapshot& other) const {
    return user_items_.offsets == other.user_items_.offsets &&
           user_items_.targets == other.user_items_.targets &&
           friends_.offsets == other.friends_.offsets &&
           friends_.targets == other.friends_.targets;
}

GraphSnapshot snapshot_at(const InteractionLog& log, Timestamp cutoff,
                          std::span<const EdgeRecord> exclude) {
    std::unordered_set<std::uint64_t> excluded;
    for (const auto& e : exclude) excluded.insert(e.key());
    std::vector<EdgeRecord> kept;
    for (const auto& e : log.edges) {
        if (e.timestamp > cutoff) break;
        if (!excluded.empty() && excluded.count(e.key())) continue;
        kept.push_back(e);
    }
    return GraphSnapshot::from_edges(log.num_users, log.num_items, kept, cutoff);
}

GraphSnapshot merge_increment(const GraphSnapshot& base, std::span<const EdgeRecord> chunk,
                              ExplicitSide explicit_side, std::optional<Timestamp> end) {
    std::uint32_t num_users = base.num_users();
    std::uint32_t num_items = base.num_items();
    Timestamp cutoff = base.cutoff();
    for (const auto& e : chunk) {
        if (e.timestamp <= base.cutoff()) {
            throw std::invalid_argument("chunk edge at " + std::to_string(e.timestamp) +
                                        " is not after the base cutoff");
        }
        cutoff = std::max(cutoff, e.timestamp);
        const std::uint32_t max_user =
            e.is_social() ? std::max(e.src.index, e.dst.index) : e.src.index;
        if (max_user >= base.num_users()) {
            if (explicit_side == ExplicitSide::Users) {
                throw InductiveViolation("user " + std::to_string(max_user) +
                                         " was not present when the explicit embeddings were fit");
            }
            num_users = std::max(num_users, max_user + 1);
        }
        if (!e.is_social() && e.dst.index >= base.num_items()) {
            if (explicit_side == ExplicitSide::Items) {
                throw InductiveViolation("item " + std::to_string(e.dst.index) +
                                         " was not present when the explicit embeddings were fit");
            }
            num_items = std::max(num_items, e.dst.index + 1);
        }
    }
    auto all = base.edges();
    all.insert(all.end(), chunk.begin(), chunk.end());
    return GraphSnapshot::from_edges(num_users, num_items, all, end.value_or(cutoff));
}

void write_degree_tsv(const GraphSnapshot& g, std::ostream& out) {
    out << "node_kind\tindex\tdegree\n";
    for (std::uint32_t u = 0; u < g.num_users(); ++u) {
        out << "user\t" << u << '\t' << g.degree(NodeId::user(u)) << '\n';
    }
    for (std::uint32_t w = 0; w < g.num_items(); ++w) {
        out << "item\t" << w << '\t' << g.degree(NodeId::item(w)) << '\n';
    }
}

ReplaySchedule build_replay_schedule(const InteractionLog& log, const WindowSpec& windows) {
    if (log.edges.empty()) throw ScheduleError("cannot schedule an empty log");
    if (windows.num_chunks < 1) throw ScheduleError("need at least one streaming chunk");
    if (!(windows.validation_fraction > 0.0 && windows.validation_fraction < 1.0)) {
        throw ScheduleError("validation fraction must lie in (0, 1)");
    }
    if (windows.offline <= 0 || windows.streaming <= 0 || windows.test <= 0) {
        throw ScheduleError("window durations must be positive");
    }

    ReplaySchedule s;
    s.start = log.first_timestamp();
    s.validation_fraction = windows.validation_fraction;
    const Timestamp offline_end = s.start + windows.offline;  // exclusive
    const Timestamp streaming_end = offline_end + windows.streaming;
    if (streaming_end > log.last_timestamp() + 1) {
        throw ScheduleError("offline + streaming windows exceed the log span");
    }
    const auto k = static_cast<Timestamp>(windows.num_chunks);
    s.cutoffs.push_back(offline_end - 1);
    for (Timestamp i = 1; i <= k; ++i) {
        s.cutoffs.push_back(offline_end + windows.streaming * i / k - 1);
    }
    s.test_end = std::min(streaming_end + windows.test, log.last_timestamp() + 1) - 1;
    return s;
}

std::vector<EdgeRecord> last_fraction(std::span<const EdgeRecord> ui_edges, double fraction) {
    const auto n = static_cast<std::size_t>(static_cast<double>(ui_edges.size()) * fraction);
    return {ui_edges.end() - static_cast<std::ptrdiff_t>(n), ui_edges.end()};
}

ReplayData materialize_replay(const InteractionLog& log, const ReplaySchedule& schedule) {
    if (schedule.cutoffs.empty()) throw ScheduleError("schedule has no cutoffs");
    const Timestamp offline = schedule.offline_cutoff();

    std::vector<char> known_user(log.num_users, 0);
    for (const auto& e : log.edges) {
        if (e.is_social()) {
            known_user[e.src.index] = known_user[e.dst.index] = 1;
        } else if (e.timestamp <= offline) {
            known_user[e.src.index] = 1;
        }
    }

    ReplayData data;
    data.schedule = schedule;
    InteractionLog staged;
    staged.num_users = log.num_users;
    staged.num_items = log.num_items;
    staged.user_ids = log.user_ids;
    staged.item_ids = log.item_ids;
    for (const auto& e : log.edges) {
        if (e.is_social()) {
            EdgeRecord moved = e;
            moved.timestamp = std::min(e.timestamp, offline);
            staged.edges.push_back(moved);
        } else if (e.timestamp > schedule.test_end || !known_user[e.src.index]) {
            ++data.dropped_edges;
        } else {
            staged.edges.push_back(e);
        }
    }
    std::stable_sort(staged.edges.begin(), staged.edges.end(),
                     [](const EdgeRecord& a, const EdgeRecord& b) { return a.timestamp < b.timestamp; });
    data.log = compact(staged);

    std::vector<EdgeRecord> offline_ui;
    data.chunks.resize(schedule.num_chunks());
    for (const auto& e : data.log.edges) {
        if (e.is_social()) {
            data.train_edges.push_back(e);
            continue;
        }
        const Timestamp t = e.timestamp;
        if (t <= offline) {
            offline_ui.push_back(e);
            data.warm_items = std::max(data.warm_items, e.dst.index + 1);
        } else if (t <= schedule.streaming_end()) {
            std::size_t k = 1;
            while (t > schedule.cutoffs[k]) ++k;
            data.chunks[k - 1].push_back(e);
            data.streamed_end = std::max(data.streamed_end, e.dst.index + 1);
        } else {
            data.test_edges.push_back(e);
        }
    }
    data.streamed_end = std::max(data.streamed_end, data.warm_items);

    data.validation_edges = last_fraction(offline_ui, schedule.validation_fraction);
    const auto n_train = offline_ui.size() - data.validation_edges.size();
    data.train_edges.insert(data.train_edges.end(), offline_ui.begin(),
                            offline_ui.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::stable_sort(data.train_edges.begin(), data.train_edges.end(),
                     [](const EdgeRecord& a, const EdgeRecord& b) { return a.timestamp < b.timestamp; });
    return data;
}

Timestamp ReplayData::step_cutoff(std::size_t step) const {
    return schedule.cutoffs.at(step);
}

GraphSnapshot ReplayData::train_snapshot() const {
    return GraphSnapshot::from_edges(log.num_users, warm_items, train_edges,
                                     schedule.offline_cutoff());
}

GraphSnapshot ReplayData::offline_snapshot() const {
    std::vector<EdgeRecord> all = train_edges;
    all.insert(all.end(), validation_edges.begin(), validation_edges.end());
    return GraphSnapshot::from_edges(log.num_users, warm_items, all, schedule.offline_cutoff());
}

GraphSnapshot ReplayData::snapshot(std::size_t step) const {
    GraphSnapshot g = offline_snapshot();
    for (std::size_t k = 1; k <= step; ++k) {
        g = merge_increment(g, chunks.at(k - 1), ExplicitSide::Users, step_cutoff(k));
    }
    return g;
}

std::vector<EdgeRecord> ReplayData::edges_through(std::size_t step) const {
    const Timestamp cutoff = step_cutoff(step);
    std::vector<EdgeRecord> out;
    for (const auto& e : log.edges) {
        if (e.timestamp > cutoff) break;
        out.push_back(e);
    }
    return out;
}

}  // namespace streamrec
