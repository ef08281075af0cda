#include "streamrec/baselines.hpp"

#include "streamrec/error.hpp"

#include <algorithm>
#include <cmath>

namespace streamrec {

std::size_t SlimModel::nonzeros() const {
    std::size_t n = 0;
    for (const auto& c : coefficients) n += c.size();
    return n;
}

double SlimModel::weight(std::uint32_t source, std::uint32_t target) const {
    if (target >= coefficients.size()) return 0.0;
    const auto& col = coefficients[target];
    const auto it = std::lower_bound(col.begin(), col.end(), source,
                                     [](const auto& p, std::uint32_t s) { return p.first < s; });
    return it != col.end() && it->first == source ? it->second : 0.0;
}

std::span<const std::uint32_t> slim_column(const GraphSnapshot& g, std::uint32_t column) {
    if (column < g.num_items()) return g.users_of(column);
    return g.friends_of(column - g.num_items());
}

namespace {

void validate(const SlimConfig& cfg) {
    if (cfg.l1 < 0.0 || cfg.l2 < 0.0) throw ConfigError("slim: penalties must be non-negative");
    if (cfg.tolerance <= 0.0) throw ConfigError("slim: tolerance must be positive");
    if (cfg.max_sweeps < 1) throw ConfigError("slim: max_sweeps must be >= 1");
}

// Columns sharing a user with the target. With non-negative weights and a
// binary matrix every other coefficient stays at zero.
std::vector<std::uint32_t> co_occurring(const GraphSnapshot& g, std::uint32_t column) {
    std::vector<std::uint32_t> out;
    for (const auto u : slim_column(g, column)) {
        for (const auto w : g.items_of(u)) out.push_back(w);
        for (const auto f : g.friends_of(u)) out.push_back(g.num_items() + f);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.erase(std::remove(out.begin(), out.end(), column), out.end());
    return out;
}

double objective_from(const std::vector<double>& residual, std::span<const double> w,
                      const SlimConfig& cfg) {
    double fit = 0.0;
    for (const double r : residual) fit += r * r;
    double sq = 0.0;
    double abs = 0.0;
    for (const double x : w) {
        sq += x * x;
        abs += std::abs(x);
    }
    return 0.5 * fit + 0.5 * cfg.l2 * sq + cfg.l1 * abs;
}

}  // namespace

double slim_column_objective(const GraphSnapshot& g, std::uint32_t column,
                             std::span<const std::pair<std::uint32_t, double>> weights,
                             const SlimConfig& cfg) {
    std::vector<double> residual(g.num_users(), 0.0);
    for (const auto u : slim_column(g, column)) residual[u] = 1.0;
    std::vector<double> w;
    for (const auto& [k, x] : weights) {
        if (k == column && x != 0.0) throw ConfigError("slim: diagonal coefficient must be zero");
        for (const auto u : slim_column(g, k)) residual[u] -= x;
        w.push_back(x);
    }
    return objective_from(residual, w, cfg);
}

SlimColumnFit slim_fit_column(const GraphSnapshot& g, std::uint32_t column, const SlimConfig& cfg) {
    validate(cfg);
    const auto coords = co_occurring(g, column);
    std::vector<double> w(coords.size(), 0.0);
    std::vector<double> residual(g.num_users(), 0.0);
    for (const auto u : slim_column(g, column)) residual[u] = 1.0;

    SlimColumnFit out;
    out.objective.push_back(objective_from(residual, w, cfg));
    while (out.sweeps < cfg.max_sweeps) {
        double max_change = 0.0;
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const auto rows = slim_column(g, coords[i]);
            const auto n = static_cast<double>(rows.size());
            double rho = n * w[i];
            for (const auto u : rows) rho += residual[u];
            const double next = std::max(0.0, (rho - cfg.l1) / (n + cfg.l2));
            const double delta = next - w[i];
            if (delta != 0.0) {
                for (const auto u : rows) residual[u] -= delta;
                w[i] = next;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        ++out.sweeps;
        out.objective.push_back(objective_from(residual, w, cfg));
        if (max_change < cfg.tolerance) break;
    }
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (w[i] > 0.0) out.weights.emplace_back(coords[i], w[i]);
    }
    return out;
}

SlimModel slim_fit(const GraphSnapshot& g, const SlimConfig& cfg) {
    validate(cfg);
    SlimModel m;
    m.num_users = g.num_users();
    m.num_items = g.num_items();
    m.coefficients.resize(m.num_columns());
    m.by_source.resize(m.num_columns());
    for (std::uint32_t j = 0; j < m.num_columns(); ++j) {
        m.coefficients[j] = slim_fit_column(g, j, cfg).weights;
        if (j >= m.num_items) continue;  // user targets are never ranked
        for (const auto& [k, x] : m.coefficients[j]) m.by_source[k].emplace_back(j, x);
    }
    return m;
}

std::vector<double> slim_score_row(const SlimModel& m, std::span<const std::uint32_t> items,
                                   std::span<const std::uint32_t> friends) {
    std::vector<double> scores(m.num_items, 0.0);
    auto add = [&](std::uint32_t source) {
        for (const auto& [t, x] : m.by_source[source]) scores[t] += x;
    };
    for (const auto w : items) {
        if (w < m.num_items) add(w);
    }
    for (const auto f : friends) {
        if (f < m.num_users) add(m.num_items + f);
    }
    return scores;
}

}  // namespace streamrec
