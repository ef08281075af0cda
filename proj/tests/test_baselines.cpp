#include "oracles.hpp"

#include "streamrec/baselines.hpp"
#include "streamrec/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace streamrec;

namespace {

// Binary user x (items, users) matrix.
Eigen::MatrixXd dense_matrix(const GraphSnapshot& g) {
    const Eigen::MatrixXd a = oracle::adjacency(g);
    Eigen::MatrixXd p(g.num_users(), g.num_items() + g.num_users());
    p << a.block(0, g.num_users(), g.num_users(), g.num_items()), a.block(0, 0, g.num_users(), g.num_users());
    return p;
}

double dense_als_objective(const AlsModel& m, const GraphSnapshot& g, const AlsConfig& cfg) {
    const Eigen::MatrixXd p = dense_matrix(g);
    Eigen::MatrixXd cols(m.items.rows() + m.social.rows(), m.users.cols());
    cols << m.items, m.social;
    const Eigen::MatrixXd r = p - m.users * cols.transpose();
    const Eigen::MatrixXd c = (1.0 + cfg.alpha * p.array()).matrix();
    return (c.array() * r.array().square()).sum() +
           cfg.reg * (m.users.squaredNorm() + cols.squaredNorm());
}

double slim_dense_objective(const GraphSnapshot& g, std::uint32_t column, const Eigen::VectorXd& w,
                            const SlimConfig& cfg) {
    const Eigen::MatrixXd p = dense_matrix(g);
    const Eigen::VectorXd r = p.col(column) - p * w;
    return 0.5 * r.squaredNorm() + 0.5 * cfg.l2 * w.squaredNorm() + cfg.l1 * w.lpNorm<1>();
}

}  // namespace

TEST_CASE("pop: counts, ties and streaming") {
    PopModel m{{5, 3, 5}};
    CHECK(popu_rank(m, {}) == std::vector<std::uint32_t>{0, 2, 1});
    const std::vector<std::uint32_t> ex{0};
    CHECK(popu_rank(m, ex) == std::vector<std::uint32_t>{2, 1});
    const std::vector<EdgeRecord> chunk{EdgeRecord::ui(0, 1, 1), EdgeRecord::ui(1, 1, 1),
                                        EdgeRecord::ui(2, 1, 1), EdgeRecord::uu(0, 1, 1)};
    pop_add_edges(m, chunk);
    CHECK(m.counts[1] == 6);
    CHECK(popu_rank(m, {}).front() == 1);

    std::mt19937_64 rng(1);
    const auto g = oracle::random_graph(rng, {8, 8, 0.4, 0.3});
    const auto from_g = pop_from_snapshot(g);
    for (std::uint32_t w = 0; w < g.num_items(); ++w) CHECK(from_g.counts[w] == g.item_degree(w));
    const std::vector<EdgeRecord> grow{EdgeRecord::ui(0, g.num_items() + 1, 5)};
    auto grown = from_g;
    pop_add_edges(grown, grow);
    CHECK(grown.counts.size() == g.num_items() + 2);
    CHECK(grown.counts.back() == 1);
}

TEST_CASE("rp3b: dense P^3 with degree penalty") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = oracle::random_graph(rng, {10, 12, 0.3, 0.2});
        for (const double beta : {0.0, 0.5, 1.0}) {
            for (std::uint32_t u = 0; u < g.num_users(); ++u) {
                const auto got = rp3b_scores(g, u, {beta, 0});
                const auto expect = oracle::rp3b(g, u, beta);
                REQUIRE(got.size() == expect.size());
                for (std::size_t w = 0; w < got.size(); ++w) CHECK(std::abs(got[w] - expect[w]) < 1e-10);
            }
        }
    }
}

TEST_CASE("rp3b: square graph and isolated user") {
    // u0 - w0 - u1 - w1, u2 isolated
    const auto g = GraphSnapshot::from_edges(
        3, 2, std::vector{EdgeRecord::ui(0, 0, 0), EdgeRecord::ui(1, 0, 0), EdgeRecord::ui(1, 1, 0)}, 0);
    const auto s = rp3b_scores(g, 0, {});
    // u0 -> w0 -> {u0, u1}: back to w0 with 1/2 + 1/4, to w1 with 1/4
    CHECK(s[0] == doctest::Approx(0.75));
    CHECK(s[1] == doctest::Approx(0.25));
    for (const double v : rp3b_scores(g, 2, {1.0, 0})) CHECK(v == 0.0);
}

TEST_CASE("rp3b: the degree penalty can flip the argmax") {
    // u0 has seen w2; of the rest, w1 (degree 3) beats w0 (degree 1) on raw
    // walk mass but not after dividing by degree.
    const std::vector<EdgeRecord> edges{EdgeRecord::ui(0, 2, 0), EdgeRecord::ui(1, 0, 0), EdgeRecord::ui(1, 1, 0),
                                        EdgeRecord::ui(1, 2, 0), EdgeRecord::ui(2, 1, 0), EdgeRecord::ui(2, 2, 0),
                                        EdgeRecord::ui(3, 1, 0)};
    const auto g = GraphSnapshot::from_edges(4, 3, edges, 0);
    for (const double beta : {0.0, 1.0}) {
        const auto got = rp3b_scores(g, 0, {beta, 0});
        const auto expect = oracle::rp3b(g, 0, beta);
        for (std::size_t w = 0; w < 3; ++w) CHECK(std::abs(got[w] - expect[w]) < 1e-12);
    }
    const auto plain = rp3b_scores(g, 0, {0.0, 0});
    const auto penalized = rp3b_scores(g, 0, {1.0, 0});
    CHECK(plain[1] > plain[0]);
    CHECK(penalized[0] > penalized[1]);
}

TEST_CASE("als: objective matches the dense weighted loss and never increases") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto g = oracle::random_graph(rng, {12, 10, 0.3, 0.2});
        AlsConfig cfg;
        cfg.dim = 4;
        cfg.iterations = 10;
        cfg.seed = static_cast<std::uint64_t>(trial);
        const auto fit = als_fit(g, cfg);
        REQUIRE(fit.objective.size() == 20);
        for (std::size_t i = 1; i < fit.objective.size(); ++i)
            CHECK(fit.objective[i] <= fit.objective[i - 1] * (1 + 1e-12));
        CHECK(als_objective(fit.model, g, cfg) ==
              doctest::Approx(dense_als_objective(fit.model, g, cfg)).epsilon(1e-10));
        const auto again = als_fit(g, cfg);
        CHECK(again.model.users == fit.model.users);
        CHECK(again.model.items == fit.model.items);
    }
}

TEST_CASE("als: all-ones 3x3 block is reconstructed") {
    std::vector<EdgeRecord> edges;
    for (std::uint32_t u = 0; u < 3; ++u)
        for (std::uint32_t w = 0; w < 3; ++w) edges.push_back(EdgeRecord::ui(u, w, 0));
    const auto g = GraphSnapshot::from_edges(3, 3, edges, 0);
    AlsConfig cfg;
    cfg.dim = 1;
    cfg.reg = 0.01;
    cfg.init_std = 0.5;
    const auto fit = als_fit(g, cfg);
    Eigen::MatrixXd cols(6, 1);
    cols << fit.model.items, fit.model.social;
    const Eigen::MatrixXd pred = fit.model.users * cols.transpose();
    const Eigen::MatrixXd p = dense_matrix(g);
    const Eigen::ArrayXd x = Eigen::Map<const Eigen::VectorXd>(pred.data(), pred.size()).array();
    const Eigen::ArrayXd y = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()).array();
    const double cov = ((x - x.mean()) * (y - y.mean())).sum();
    const double corr = cov / std::sqrt((x - x.mean()).square().sum() * (y - y.mean()).square().sum());
    CHECK(corr > 0.99);
}

TEST_CASE("als: fold-in re-solves columns only") {
    std::mt19937_64 rng(4);
    const auto g = oracle::random_graph(rng, {10, 8, 0.4, 0.2});
    AlsConfig cfg;
    cfg.dim = 3;
    cfg.iterations = 5;
    const auto fit = als_fit(g, cfg);

    auto same = fit.model;
    als_fold_in(same, g, cfg);
    CHECK(same.users == fit.model.users);
    CHECK((same.items - fit.model.items).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((same.social - fit.model.social).cwiseAbs().maxCoeff() < 1e-12);

    const std::uint32_t fresh = g.num_items();
    const std::vector<EdgeRecord> chunk{EdgeRecord::ui(2, fresh, 1)};
    const auto grown = merge_increment(g, chunk);
    auto folded = fit.model;
    als_fold_in(folded, grown, cfg);
    CHECK(folded.users == fit.model.users);
    REQUIRE(folded.items.rows() == grown.num_items());
    // one-observation ridge solution by a dense solve
    const Eigen::MatrixXd& x = fit.model.users;
    Eigen::VectorXd c = Eigen::VectorXd::Ones(x.rows());
    Eigen::VectorXd r = Eigen::VectorXd::Zero(x.rows());
    c(2) += cfg.alpha;
    r(2) = 1.0;
    const Eigen::MatrixXd a = x.transpose() * c.asDiagonal() * x +
                              cfg.reg * Eigen::MatrixXd::Identity(cfg.dim, cfg.dim);
    const Eigen::VectorXd b = x.transpose() * c.asDiagonal() * r;
    const Eigen::VectorXd expect = a.fullPivLu().solve(b);
    CHECK((folded.items.row(fresh).transpose() - expect).cwiseAbs().maxCoeff() < 1e-10);
    const auto scores = als_scores(folded, 2);
    CHECK(scores.size() == grown.num_items());

    const std::vector<EdgeRecord> new_user{EdgeRecord::ui(g.num_users(), 0, 1)};
    const auto more_users = merge_increment(g, new_user, ExplicitSide::Items);
    auto bad = fit.model;
    CHECK_THROWS_AS(als_fold_in(bad, more_users, cfg), InductiveViolation);
}

TEST_CASE("slim: sweeps never raise the column objective") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = oracle::random_graph(rng, {15, 10, 0.35, 0.2});
        SlimConfig cfg;
        cfg.l1 = 0.05 * trial;
        cfg.l2 = 0.5;
        for (std::uint32_t col = 0; col < g.num_items() + g.num_users(); ++col) {
            const auto fit = slim_fit_column(g, col, cfg);
            for (std::size_t i = 1; i < fit.objective.size(); ++i)
                CHECK(fit.objective[i] <= fit.objective[i - 1] + 1e-12);
            for (const auto& [k, w] : fit.weights) {
                CHECK(k != col);
                CHECK(w > 0.0);
            }
            Eigen::VectorXd dense = Eigen::VectorXd::Zero(g.num_items() + g.num_users());
            for (const auto& [k, w] : fit.weights) dense(k) = w;
            CHECK(slim_column_objective(g, col, fit.weights, cfg) ==
                  doctest::Approx(slim_dense_objective(g, col, dense, cfg)).epsilon(1e-12));
        }
    }
}

TEST_CASE("slim: two-column instance agrees with a grid refine") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        std::bernoulli_distribution coin(0.5);
        std::vector<EdgeRecord> edges;
        for (std::uint32_t u = 0; u < 12; ++u)
            for (std::uint32_t w = 0; w < 2; ++w)
                if (coin(rng)) edges.push_back(EdgeRecord::ui(u, w, 0));
        const auto g = GraphSnapshot::from_edges(12, 2, edges, 0);
        SlimConfig cfg;
        cfg.l1 = 0.1 * trial;
        cfg.l2 = 0.5;
        for (std::uint32_t col = 0; col < 2; ++col) {
            const auto fit = slim_fit_column(g, col, cfg);
            Eigen::VectorXd w = Eigen::VectorXd::Zero(14);
            double best = std::numeric_limits<double>::infinity();
            double lo = 0.0, hi = 2.0;
            for (int level = 0; level < 6; ++level) {
                double arg = lo;
                for (int i = 0; i <= 100; ++i) {
                    w(1 - col) = lo + (hi - lo) * i / 100.0;
                    const double f = slim_dense_objective(g, col, w, cfg);
                    if (f < best) best = f, arg = w(1 - col);
                }
                const double step = (hi - lo) / 100.0;
                lo = std::max(0.0, arg - step);
                hi = arg + step;
            }
            CHECK(std::abs(fit.objective.back() - best) < 1e-3);
        }
    }
}

TEST_CASE("slim: identical columns, heavy l1, zero diagonal") {
    std::vector<EdgeRecord> edges;
    for (std::uint32_t u = 0; u < 8; ++u) {
        if (u % 2 == 0) {
            edges.push_back(EdgeRecord::ui(u, 0, 0));
            edges.push_back(EdgeRecord::ui(u, 1, 0));
        }
        if (u % 3 == 0) edges.push_back(EdgeRecord::ui(u, 2, 0));
    }
    const auto g = GraphSnapshot::from_edges(8, 3, edges, 0);
    SlimConfig cfg;
    cfg.l1 = 0.01;
    cfg.l2 = 0.01;
    const auto m = slim_fit(g, cfg);
    CHECK(m.weight(1, 0) > 0.5);
    CHECK(m.weight(0, 1) > 0.5);
    for (std::uint32_t j = 0; j < m.num_columns(); ++j) CHECK(m.weight(j, j) == 0.0);

    cfg.l1 = 1e6;
    CHECK(slim_fit(g, cfg).nonzeros() == 0);
}

TEST_CASE("slim: scoring a user row") {
    std::mt19937_64 rng(7);
    const auto g = oracle::random_graph(rng, {12, 9, 0.4, 0.3});
    const auto m = slim_fit(g, SlimConfig{0.05, 0.5});
    for (const double v : slim_score_row(m, {}, {})) CHECK(v == 0.0);

    const std::vector<std::uint32_t> one{3 % g.num_items()};
    const auto s = slim_score_row(m, one, {});
    for (std::uint32_t w = 0; w < g.num_items(); ++w) CHECK(s[w] == m.weight(one[0], w));

    const std::vector<std::uint32_t> items{0};
    const std::vector<std::uint32_t> friends{1 % g.num_users()};
    const auto base = slim_score_row(m, items, {});
    const auto with_friend = slim_score_row(m, items, friends);
    for (std::uint32_t w = 0; w < g.num_items(); ++w)
        CHECK(with_friend[w] - base[w] == doctest::Approx(m.weight(g.num_items() + friends[0], w)));

    // unknown columns contribute nothing
    const std::vector<std::uint32_t> unknown{0, g.num_items() + 4};
    CHECK(slim_score_row(m, unknown, {}) == base);
}

TEST_CASE("lightgcn: zero layers is plain factorization") {
    LightGcnConfig cfg;
    cfg.dim = 4;
    cfg.num_layers = 0;
    std::mt19937_64 rng(8);
    const auto g = oracle::random_graph(rng);
    const auto p = lightgcn_init(g.num_users(), g.num_items(), cfg);
    const auto t = lightgcn_tables(p, g, cfg);
    CHECK(t.user == p.users);
    CHECK(t.item == p.items);
}

TEST_CASE("lightgcn: tables match the dense layer average and ignore unknown items") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = oracle::random_graph(rng, {8, 8, 0.4, 0.3});
        LightGcnConfig cfg;
        cfg.dim = 3;
        cfg.normalization = trial % 2 ? NormalizationKind::RowMean : NormalizationKind::SymmetricSqrt;
        cfg.seed = static_cast<std::uint64_t>(trial);
        const auto p = lightgcn_init(g.num_users(), g.num_items(), cfg);
        Eigen::MatrixXd x0(g.num_nodes(), 3);
        x0 << oracle::to_dense(p.users), oracle::to_dense(p.items);
        const auto avg = oracle::layer_average(x0, g, 3, cfg.normalization);
        const auto t = lightgcn_tables(p, g, cfg);
        CHECK(oracle::max_abs_diff(avg.topRows(g.num_users()), t.user) < 1e-10);
        CHECK(oracle::max_abs_diff(avg.bottomRows(g.num_items()), t.item) < 1e-10);

        const std::vector<EdgeRecord> chunk{EdgeRecord::ui(0, g.num_items(), 1)};
        const auto grown = merge_increment(g, chunk);
        const auto tg = lightgcn_tables(p, grown, cfg);
        CHECK(tg.item.rows() == g.num_items());
    }
}

TEST_CASE("lightgcn: gradient against central differences") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = oracle::random_graph(rng);
        LightGcnConfig cfg;
        cfg.dim = 3;
        cfg.num_layers = 1 + trial % 3;
        LightGcnParams p{oracle::random_table(rng, g.num_users(), 3), oracle::random_table(rng, g.num_items(), 3)};
        std::uniform_int_distribution<std::uint32_t> ud(0, g.num_users() - 1), wd(0, g.num_items() - 1);
        std::vector<Triple> triples;
        for (int i = 0; i < 5; ++i) triples.push_back({ud(rng), wd(rng), wd(rng)});
        const auto grad = lightgcn_grad(p, g, triples, cfg);
        auto check = [&](EmbeddingTable& table, const EmbeddingTable& analytic) {
            for (std::size_t i = 0; i < table.values().size(); ++i) {
                const double keep = table.values()[i];
                table.values()[i] = keep + 1e-5;
                const double up = lightgcn_bpr_loss(p, g, triples, cfg);
                table.values()[i] = keep - 1e-5;
                const double down = lightgcn_bpr_loss(p, g, triples, cfg);
                table.values()[i] = keep;
                const double num = (up - down) / 2e-5;
                const double a = analytic.values()[i];
                CHECK(std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-6}) < 1e-4);
            }
        };
        check(p.users, grad.d_users);
        check(p.items, grad.d_items);
    }
}

TEST_CASE("lightgcn: freeze masks keep tables bit-identical") {
    std::mt19937_64 rng(11);
    auto edges = oracle::random_edges(rng, 12, 15, 0.3, 0.2);
    std::vector<EdgeRecord> train, val;
    for (std::size_t i = 0; i < edges.size(); ++i)
        (i % 5 == 4 && !edges[i].is_social() ? val : train).push_back(edges[i]);
    const auto g = GraphSnapshot::from_edges(12, 15, train, 0);
    LightGcnConfig cfg;
    cfg.dim = 4;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-2;
    const auto init = lightgcn_init(g.num_users(), g.num_items(), cfg);
    const auto fu = lightgcn_fit(g, val, cfg, &init, {true, false}, true);
    CHECK(fu.params.users == init.users);
    const auto fi = lightgcn_fit(g, val, cfg, &init, {false, true}, true);
    CHECK(fi.params.items == init.items);

    const auto a = lightgcn_fit(g, val, cfg);
    const auto b = lightgcn_fit(g, val, cfg);
    CHECK(a.params == b.params);
}
