#include "oracles.hpp"

#include "streamrec/error.hpp"
#include "streamrec/metrics.hpp"
#include "streamrec/recommender.hpp"
#include "streamrec/replay.hpp"
#include "streamrec/stats.hpp"
#include "streamrec/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

using namespace streamrec;

namespace {

std::vector<std::uint32_t> v(std::initializer_list<std::uint32_t> xs) { return xs; }

ReplayData small_planted(std::uint64_t seed) {
    PlantedConfig pc;
    pc.num_users = 60;
    pc.num_items = 90;
    pc.interactions_per_user = 14;
    pc.seed = seed;
    const auto pg = make_planted_graph(pc);
    return materialize_replay(pg.log, build_replay_schedule(pg.log, pg.windows));
}

// Scores a fixed per-item vector for every user and ignores graph updates.
class FixedScores final : public Recommender {
public:
    explicit FixedScores(std::vector<double> s) : s_(std::move(s)) {}
    ModelKind kind() const override { return ModelKind::Pop; }
    void fit(const TrainingData&) override {}
    void update(const GraphSnapshot&) override {}
    std::uint32_t scoreable_items() const override { return static_cast<std::uint32_t>(s_.size()); }
    void score(std::uint32_t, std::span<double> out) const override {
        std::copy(s_.begin(), s_.begin() + static_cast<std::ptrdiff_t>(out.size()), out.begin());
    }
    std::size_t param_count() const override { return 0; }
    nlohmann::json hyperparams() const override { return nlohmann::json::object(); }
    nlohmann::json state() const override { return nlohmann::json::object(); }
    void load_state(const nlohmann::json&) override {}
    std::unique_ptr<Recommender> fresh() const override { return std::make_unique<FixedScores>(s_); }

private:
    std::vector<double> s_;
};

nlohmann::json small_lce_params() {
    return {{"dim", 16}, {"composition", "sum"}, {"learning_rate", 1e-2}, {"batch_size", 64},
            {"max_epochs", 40}, {"patience", 10}};
}

}  // namespace

TEST_CASE("recall examples") {
    const auto rel = v({1, 2, 3});
    CHECK(recall_at_n(v({1, 9}), rel, 2) == doctest::Approx(1.0 / 3.0));
    CHECK(recall_at_n(v({3, 1, 2, 7}), rel, 4) == 1.0);
    CHECK(recall_at_n(v({7, 8}), rel, 2) == 0.0);
}

TEST_CASE("ndcg examples") {
    CHECK(ndcg_at_n(v({1, 9}), v({1, 2}), 2) == doctest::Approx(1.0 / (1.0 + 1.0 / std::log2(3.0))));
    CHECK(ndcg_at_n(v({1, 9}), v({1, 2}), 2) == doctest::Approx(0.6131).epsilon(1e-4));
    CHECK(ndcg_at_n(v({2, 1, 5}), v({1, 2}), 3) == 1.0);
    CHECK(ndcg_at_n(v({5, 6}), v({1, 2}), 2) == 0.0);
    // single relevant item at rank r
    for (std::uint32_t r = 1; r <= 5; ++r) {
        std::vector<std::uint32_t> ranked(5);
        std::iota(ranked.begin(), ranked.end(), 10);
        ranked[r - 1] = 0;
        CHECK(ndcg_at_n(ranked, v({0}), 5) == doctest::Approx(1.0 / std::log2(r + 1.0)));
    }
}

TEST_CASE("precision examples") {
    CHECK(precision_at_n(v({9, 1, 8}), v({1}), 3) == doctest::Approx(1.0 / 3.0));
    CHECK(precision_at_n(v({1, 2, 3}), v({1, 2, 3, 4}), 3) == 1.0);
    CHECK(precision_at_n(v({7, 8, 9}), v({1}), 3) == 0.0);
}

TEST_CASE("metrics match brute force on random lists and stay in [0, 1]") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint32_t> pool(40);
        std::iota(pool.begin(), pool.end(), 0);
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t len = 1 + rng() % 40;
        const std::vector<std::uint32_t> ranked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::set<std::uint32_t> rel(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(1 + rng() % 10));
        const std::vector<std::uint32_t> rel_v(rel.begin(), rel.end());
        for (const std::size_t n : {1, 3, 5, 10, 20, 50}) {
            const double r = recall_at_n(ranked, rel_v, n);
            const double p = precision_at_n(ranked, rel_v, n);
            const double d = ndcg_at_n(ranked, rel_v, n);
            CHECK(std::abs(r - oracle::recall(ranked, rel, n)) < 1e-12);
            CHECK(std::abs(p - oracle::precision(ranked, rel, n)) < 1e-12);
            CHECK(std::abs(d - oracle::ndcg(ranked, rel, n)) < 1e-12);
            for (const double x : {r, p, d}) CHECK((x >= 0.0 && x <= 1.0));
        }
    }
}

TEST_CASE("rank_items: ordering, ties, exclusion, limit") {
    const std::vector<double> s{0.2, 0.9, 0.2, 0.5, 0.9};
    const auto all = rank_items(0, s, {});
    CHECK(all.items == v({1, 4, 3, 0, 2}));
    CHECK(std::is_sorted(all.scores.rbegin(), all.scores.rend()));
    const auto ex = v({1, 3});
    CHECK(rank_items(0, s, ex).items == v({4, 0, 2}));
    CHECK(rank_items(0, s, {}, 2).items == v({1, 4}));
}

TEST_CASE("evaluate: single user, averaging, empty input") {
    const auto g = GraphSnapshot::from_edges(2, 3, std::vector<EdgeRecord>{}, 0);
    const std::vector<EdgeRecord> test{EdgeRecord::ui(0, 0, 1)};
    const auto first = [](std::uint32_t, std::span<double> out) {
        for (std::size_t w = 0; w < out.size(); ++w) out[w] = -static_cast<double>(w);
    };
    EvalConfig cfg;
    cfg.cold_start_mode = ColdStartMode::All;
    const auto one = evaluate(first, 3, {&g, test, {}}, cfg);
    CHECK(one.recall.at(20) == 1.0);
    CHECK(one.ndcg.at(20) == 1.0);
    CHECK(one.users_evaluated == 1);

    cfg.cutoffs = {1};
    const std::vector<EdgeRecord> two{EdgeRecord::ui(0, 0, 1), EdgeRecord::ui(1, 2, 1)};
    CHECK(evaluate(first, 3, {&g, two, {}}, cfg).recall.at(1) == 0.5);

    CHECK_THROWS_AS(evaluate(first, 3, {&g, {}, {}}, cfg), EmptyEvaluationError);
    cfg.cutoffs = {0};
    CHECK_THROWS_AS(evaluate(first, 3, {&g, test, {}}, cfg), ConfigError);
}

TEST_CASE("evaluate: five users against hand scoring") {
    std::mt19937_64 rng(2);
    const std::uint32_t nu = 5, nw = 12;
    const auto g = GraphSnapshot::from_edges(nu, nw, oracle::random_edges(rng, nu, nw, 0.25, 0.0), 0);
    std::vector<EdgeRecord> test;
    for (std::uint32_t u = 0; u < nu; ++u)
        for (std::uint32_t w = 0; w < nw; ++w)
            if (!g.has_ui(u, w) && (u * 7 + w * 3) % 5 == 0) test.push_back(EdgeRecord::ui(u, w, 1));
    const auto scores = oracle::random_table(rng, nu, nw);
    const auto scorer = [&](std::uint32_t u, std::span<double> out) {
        std::copy(scores.row(u).begin(), scores.row(u).end(), out.begin());
    };
    EvalConfig cfg;
    cfg.cutoffs = {3, 5};
    cfg.cold_start_mode = ColdStartMode::All;
    std::vector<RankedList> seen_lists;
    const auto rec = evaluate(scorer, nw, {&g, test, {}}, cfg, [&](const RankedList& l) { seen_lists.push_back(l); });
    for (const auto& l : seen_lists)
        for (const auto w : l.items) CHECK_FALSE(g.has_ui(l.user, w));

    for (const int n : {3, 5}) {
        double r_sum = 0, d_sum = 0, p_sum = 0;
        int users = 0;
        for (std::uint32_t u = 0; u < nu; ++u) {
            std::set<std::uint32_t> rel;
            for (const auto& e : test)
                if (e.src.index == u) rel.insert(e.dst.index);
            if (rel.empty()) continue;
            std::vector<std::uint32_t> order;
            for (std::uint32_t w = 0; w < nw; ++w)
                if (!g.has_ui(u, w)) order.push_back(w);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return scores(u, a) > scores(u, b); });
            r_sum += oracle::recall(order, rel, n);
            d_sum += oracle::ndcg(order, rel, n);
            p_sum += oracle::precision(order, rel, n);
            ++users;
        }
        CHECK(rec.users_evaluated == static_cast<std::size_t>(users));
        CHECK(std::abs(rec.recall.at(n) - r_sum / users) < 1e-12);
        CHECK(std::abs(rec.ndcg.at(n) - d_sum / users) < 1e-12);
        CHECK(std::abs(rec.precision.at(n) - p_sum / users) < 1e-12);
    }
    // purity
    CHECK(evaluate(scorer, nw, {&g, test, {}}, cfg) == rec);
}

TEST_CASE("evaluate: cold-start modes and unscoreable items") {
    const auto g = GraphSnapshot::from_edges(1, 6, std::vector<EdgeRecord>{}, 0);
    // warm [0, 3), cold [3, 5), item 5 only appears in the test window
    const std::vector<EdgeRecord> test{EdgeRecord::ui(0, 1, 1), EdgeRecord::ui(0, 4, 1), EdgeRecord::ui(0, 5, 1)};
    const auto scorer = [](std::uint32_t, std::span<double> out) {
        for (std::size_t w = 0; w < out.size(); ++w) out[w] = static_cast<double>(w);
    };
    EvalConfig cfg;
    cfg.cutoffs = {1};
    const ItemClasses classes{3, 5};
    cfg.cold_start_mode = ColdStartMode::Exclude;
    CHECK(evaluate(scorer, 6, {&g, test, classes}, cfg).recall.at(1) == 0.0);  // ranks 2 first
    cfg.cold_start_mode = ColdStartMode::Only;
    CHECK(evaluate(scorer, 6, {&g, test, classes}, cfg).recall.at(1) == 0.0);  // ranks 5 first
    CHECK(evaluate(scorer, 5, {&g, test, classes}, cfg).recall.at(1) == 1.0);
    const auto limited = evaluate(scorer, 3, {&g, test, classes}, cfg);
    CHECK(limited.unscoreable_relevant == 1);
    CHECK(limited.recall.at(1) == 0.0);
    cfg.cold_start_mode = ColdStartMode::All;
    CHECK(evaluate(scorer, 6, {&g, test, classes}, cfg).users_evaluated == 1);
}

TEST_CASE("evaluate: adding an item to the exclusion set removes it") {
    std::mt19937_64 rng(3);
    const auto scores = oracle::random_table(rng, 1, 10);
    const auto scorer = [&](std::uint32_t, std::span<double> out) {
        std::copy(scores.row(0).begin(), scores.row(0).end(), out.begin());
    };
    const auto order = rank_items(0, scores.row(0), {}).items;
    const std::vector<EdgeRecord> test{EdgeRecord::ui(0, order[0], 1), EdgeRecord::ui(0, order[5], 1)};
    EvalConfig cfg;
    cfg.cutoffs = {1, 3};
    cfg.cold_start_mode = ColdStartMode::All;
    const auto empty = GraphSnapshot::from_edges(1, 10, std::vector<EdgeRecord>{}, 0);
    const auto base = evaluate(scorer, 10, {&empty, test, {}}, cfg);
    const auto seen = GraphSnapshot::from_edges(1, 10, std::vector{EdgeRecord::ui(0, order[0], 0)}, 0);
    const auto after = evaluate(scorer, 10, {&seen, test, {}}, cfg);
    CHECK(after.recall.at(1) <= base.recall.at(1));
    CHECK(base.recall.at(1) == 0.5);
    CHECK(after.recall.at(1) == 0.0);
}

TEST_CASE("random-ranking recall matches a direct count") {
    const auto g = GraphSnapshot::from_edges(2, 30, std::vector{EdgeRecord::ui(0, 0, 0), EdgeRecord::ui(0, 1, 0)}, 0);
    const std::vector<EdgeRecord> test{EdgeRecord::ui(0, 5, 1), EdgeRecord::ui(1, 7, 1)};
    EvalConfig cfg;
    cfg.cold_start_mode = ColdStartMode::All;
    const double expect = 0.5 * (20.0 / 28.0 + 20.0 / 30.0);
    CHECK(random_ranking_recall(30, {&g, test, {}}, cfg, 20) == doctest::Approx(expect));
}

TEST_CASE("paired t-test examples") {
    const std::vector<double> a{1, 2, 3, 4}, b{0, 2, 2, 5};
    const auto r = paired_t_test(a, b);
    CHECK(r.mean_difference == doctest::Approx(0.25));
    CHECK(r.t == doctest::Approx(0.5222).epsilon(1e-3));
    CHECK(r.p_value == doctest::Approx(0.318).epsilon(2e-3));
    CHECK(r.n == 4);

    const std::vector<double> c{0.5, 0.6, 0.7}, d{0.4, 0.5, 0.6};
    CHECK_THROWS_AS(paired_t_test(c, d), DegenerateVarianceError);

    const std::vector<double> e{2, 3, 4, 5, 6}, f{1, 2, 3, 4, 5};
    const auto floored = paired_t_test(e, f, VarianceHandling::Floor);
    CHECK(floored.p_value < 1e-12);
    CHECK(floored.t > 1e5);

    CHECK_THROWS_AS(paired_t_test(std::vector<double>{1}, std::vector<double>{2}), ConfigError);
    CHECK_THROWS_AS(paired_t_test(a, c), ConfigError);
}

TEST_CASE("replay: step labels and a single offline record without chunks") {
    CHECK(step_label(0) == "offline");
    CHECK(step_label(3) == "t3");
    auto data = small_planted(1);
    data.chunks.clear();
    data.schedule.cutoffs.resize(1);
    FixedScores m(std::vector<double>(data.warm_items, 0.0));
    const std::vector<NamedModel> models{{"fixed", &m}};
    const auto recs = run_replay(models, data, EvalConfig{});
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].metrics.step == "offline");
}

TEST_CASE("replay: identity update with chunks away from evaluated users") {
    // users 0 and 1 are evaluated, user 2 only streams
    ReplayData data;
    data.log.num_users = 3;
    data.log.num_items = 6;
    data.schedule.cutoffs = {10, 20, 30};
    data.schedule.test_end = 40;
    data.warm_items = 5;
    data.streamed_end = 5;
    data.train_edges = {EdgeRecord::ui(0, 0, 1), EdgeRecord::ui(1, 1, 2), EdgeRecord::ui(2, 2, 3)};
    data.chunks = {{EdgeRecord::ui(2, 3, 15)}, {EdgeRecord::ui(2, 4, 25)}};
    data.test_edges = {EdgeRecord::ui(0, 3, 35), EdgeRecord::ui(1, 4, 36)};
    FixedScores m({0.1, 0.5, 0.3, 0.9, 0.2});
    const std::vector<NamedModel> models{{"fixed", &m}};
    EvalConfig cfg;
    cfg.cutoffs = {1, 2};
    const auto recs = run_replay(models, data, cfg);
    REQUIRE(recs.size() == 3);
    for (const auto& r : recs) {
        CHECK(r.metrics.recall == recs[0].metrics.recall);
        CHECK(r.metrics.ndcg == recs[0].metrics.ndcg);
        CHECK(r.metrics.users == recs[0].metrics.users);
    }
}

TEST_CASE("replay: LCE steps equal evaluating a freshly composed model") {
    const auto data = small_planted(2);
    auto lce = make_recommender(ModelKind::Lce, small_lce_params(), 3);
    lce->fit(skyline_training_data(data, 0));
    const auto state = lce->state();
    const std::vector<NamedModel> models{{"lce", lce.get()}};
    EvalConfig cfg;
    const auto recs = run_replay(models, data, cfg);
    REQUIRE(recs.size() == data.num_steps());
    for (std::size_t k = 0; k < data.num_steps(); ++k) {
        auto copy = lce->fresh();
        copy->load_state(state);
        const auto scratch = GraphSnapshot::from_edges(data.log.num_users, data.snapshot(k).num_items(),
                                                       data.edges_through(k), data.step_cutoff(k));
        copy->update(scratch);
        auto rec = evaluate_model(*copy, scratch, data.test_edges, item_classes(data), cfg);
        rec.step = step_label(k);
        CHECK(rec == recs[k].metrics);
    }
}

TEST_CASE("skyline: step 0 reproduces the offline record, determinism") {
    const auto data = small_planted(3);
    auto proto = make_recommender(ModelKind::Lce, small_lce_params(), 5);
    auto trained = proto->fresh();
    trained->fit(skyline_training_data(data, 0));
    const std::vector<NamedModel> inc{{"lce", trained.get()}};
    const std::vector<NamedModel> protos{{"lce", proto.get()}};
    EvalConfig cfg;
    const auto replay = run_replay(inc, data, cfg);
    const auto sky = run_skyline(protos, data, cfg);
    REQUIRE(sky.size() == data.num_steps());
    CHECK(sky[0].metrics.recall == replay[0].metrics.recall);
    CHECK(sky[0].metrics.ndcg == replay[0].metrics.ndcg);
    CHECK(sky[1].metrics.step == "skyline@t1");
    CHECK(sky[1].mode == "skyline");
    const auto again = run_skyline(protos, data, cfg);
    for (std::size_t i = 0; i < sky.size(); ++i) CHECK(again[i].metrics == sky[i].metrics);
}

TEST_CASE("probe: chronological quartiles and frozen tables") {
    const auto data = small_planted(5);
    const auto buckets = probe_buckets(data);
    REQUIRE(buckets.size() == 4);
    std::size_t total = 0;
    Timestamp last = std::numeric_limits<Timestamp>::min();
    std::vector<std::size_t> sizes;
    for (const auto& b : buckets) {
        std::size_t ui = 0;
        for (const auto& e : b) {
            if (e.is_social()) continue;
            CHECK(e.timestamp >= last);
            ++ui;
        }
        for (const auto& e : b)
            if (!e.is_social()) last = std::max(last, e.timestamp);
        sizes.push_back(ui);
        total += ui;
    }
    CHECK(total == data.validation_edges.size() + data.train_snapshot().num_ui_edges());
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);

    LightGcnConfig cfg;
    cfg.dim = 8;
    cfg.batch_size = 64;
    cfg.learning_rate = 1e-2;
    cfg.max_epochs = 15;
    cfg.patience = 5;
    EvalConfig eval;
    eval.cold_start_mode = ColdStartMode::Exclude;
    for (const auto side : {NodeSet::Users, NodeSet::Items}) {
        const auto probe = stationarity_probe(data, cfg, side, eval);
        REQUIRE(probe.size() == 4);
        for (std::size_t b = 1; b < 4; ++b) {
            if (side == NodeSet::Users) CHECK(probe[b].params.users == probe[0].params.users);
            else CHECK(probe[b].params.items == probe[0].params.items);
            CHECK(probe[b].label == "D" + std::to_string(b + 1));
        }
    }
}
