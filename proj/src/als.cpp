#include "streamrec/baselines.hpp"

#include "streamrec/error.hpp"

#include <random>

namespace streamrec {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// argmin_x sum_j c_j (p_j - x.y_j)^2 + reg |x|^2 with p = 1, c = 1 + alpha on
// the listed rows and p = 0, c = 1 elsewhere; `gram` is Y^T Y over all rows.
template <class ForEachRow>
Vec ridge_solve(const Mat& gram, double alpha, double reg, ForEachRow for_each_row) {
    Mat a = gram;
    Vec b = Vec::Zero(gram.rows());
    for_each_row([&](const auto& y) {
        a.noalias() += alpha * y.transpose() * y;
        b.noalias() += (1.0 + alpha) * y.transpose();
    });
    a.diagonal().array() += reg;
    return a.ldlt().solve(b);
}

void solve_users(AlsModel& m, const GraphSnapshot& g, const AlsConfig& cfg) {
    const Mat gram = m.items.transpose() * m.items + m.social.transpose() * m.social;
    for (std::uint32_t u = 0; u < g.num_users(); ++u) {
        m.users.row(u) = ridge_solve(gram, cfg.alpha, cfg.reg, [&](auto&& visit) {
                             for (const auto w : g.items_of(u)) visit(m.items.row(w));
                             for (const auto f : g.friends_of(u)) visit(m.social.row(f));
                         }).transpose();
    }
}

void solve_columns(AlsModel& m, const GraphSnapshot& g, const AlsConfig& cfg) {
    const Mat gram = m.users.transpose() * m.users;
    if (m.items.rows() != g.num_items()) m.items.conservativeResize(g.num_items(), m.users.cols());
    for (std::uint32_t w = 0; w < g.num_items(); ++w) {
        m.items.row(w) = ridge_solve(gram, cfg.alpha, cfg.reg, [&](auto&& visit) {
                             for (const auto u : g.users_of(w)) visit(m.users.row(u));
                         }).transpose();
    }
    for (std::uint32_t v = 0; v < g.num_users(); ++v) {
        m.social.row(v) = ridge_solve(gram, cfg.alpha, cfg.reg, [&](auto&& visit) {
                              for (const auto f : g.friends_of(v)) visit(m.users.row(f));
                          }).transpose();
    }
}

}  // namespace

AlsFit als_fit(const GraphSnapshot& g, const AlsConfig& cfg) {
    if (cfg.dim < 1) throw ConfigError("als: dim must be >= 1");
    if (cfg.reg <= 0.0) throw ConfigError("als: reg must be positive");
    if (cfg.iterations < 1) throw ConfigError("als: iterations must be >= 1");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> dist(0.0, cfg.init_std);
    auto random_matrix = [&](Eigen::Index rows) {
        Mat out(rows, cfg.dim);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cfg.dim; ++j) out(i, j) = dist(rng);
        }
        return out;
    };

    AlsFit fit;
    fit.model.users = random_matrix(g.num_users());
    fit.model.items = random_matrix(g.num_items());
    fit.model.social = random_matrix(g.num_users());
    for (int it = 0; it < cfg.iterations; ++it) {
        solve_users(fit.model, g, cfg);
        fit.objective.push_back(als_objective(fit.model, g, cfg));
        solve_columns(fit.model, g, cfg);
        fit.objective.push_back(als_objective(fit.model, g, cfg));
    }
    return fit;
}

double als_objective(const AlsModel& m, const GraphSnapshot& g, const AlsConfig& cfg) {
    const Mat xtx = m.users.transpose() * m.users;
    const Mat yty = m.items.transpose() * m.items + m.social.transpose() * m.social;
    double total = xtx.cwiseProduct(yty).sum();  // every entry as unobserved
    const double c = 1.0 + cfg.alpha;
    for (std::uint32_t u = 0; u < g.num_users(); ++u) {
        auto observed = [&](double s) { total += c * (1.0 - s) * (1.0 - s) - s * s; };
        for (const auto w : g.items_of(u)) observed(m.users.row(u).dot(m.items.row(w)));
        for (const auto f : g.friends_of(u)) observed(m.users.row(u).dot(m.social.row(f)));
    }
    total += cfg.reg * (m.users.squaredNorm() + m.items.squaredNorm() + m.social.squaredNorm());
    return total;
}

void als_fold_in(AlsModel& m, const GraphSnapshot& g, const AlsConfig& cfg) {
    if (g.num_users() != m.users.rows()) {
        throw InductiveViolation("als fold-in: user set changed since fit");
    }
    solve_columns(m, g, cfg);
}

std::vector<double> als_scores(const AlsModel& m, std::uint32_t user) {
    const Vec s = m.items * m.users.row(user).transpose();
    return {s.data(), s.data() + s.size()};
}

}  // namespace streamrec
