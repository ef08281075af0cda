#include "streamrec/baselines.hpp"

#include "streamrec/error.hpp"
#include "streamrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace streamrec {

void LightGcnConfig::validate() const {
    if (dim < 1) throw ConfigError("lightgcn: dim must be >= 1");
    if (num_layers < 0) throw ConfigError("lightgcn: num_layers must be >= 0");
    if (batch_size < 1) throw ConfigError("lightgcn: batch_size must be >= 1");
    if (max_epochs < 1 || patience < 1) {
        throw ConfigError("lightgcn: max_epochs and patience must be >= 1");
    }
    if (learning_rate < 0.0 || weight_decay < 0.0) {
        throw ConfigError("lightgcn: learning_rate and weight_decay must be non-negative");
    }
}

LightGcnParams lightgcn_init(std::uint32_t num_users, std::uint32_t num_items, const LightGcnConfig& cfg) {
    const auto d = static_cast<std::size_t>(cfg.dim);
    std::mt19937_64 rng(cfg.seed);
    auto table = [&](std::size_t rows) {
        EmbeddingTable t(rows, d);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + d));
        for (auto& v : t.values()) v = bound * dist(rng);
        return t;
    };
    LightGcnParams p;
    p.users = table(num_users);
    p.items = table(num_items);
    return p;
}

namespace {

std::uint32_t known_items(const LightGcnParams& p, const GraphSnapshot& g) {
    return static_cast<std::uint32_t>(std::min<std::size_t>(p.items.rows(), g.num_items()));
}

EmbeddingTable averaged(const LightGcnParams& p, const GraphSnapshot& g, const LightGcnConfig& cfg) {
    if (g.num_users() != p.users.rows()) {
        throw InductiveViolation("lightgcn: graph has " + std::to_string(g.num_users()) +
                                 " users but the model embeds " + std::to_string(p.users.rows()));
    }
    const std::size_t d = p.users.dim();
    EmbeddingTable init(g.num_nodes(), d);
    std::copy(p.users.values().begin(), p.users.values().end(), init.values().begin());
    const std::size_t item_values = static_cast<std::size_t>(known_items(p, g)) * d;
    std::copy_n(p.items.values().begin(), item_values,
                init.values().begin() + static_cast<std::ptrdiff_t>(g.num_users() * d));
    return layer_average_all(propagate_layers(std::move(init), g, cfg.num_layers, cfg.normalization));
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

ScoringTables lightgcn_tables(const LightGcnParams& p, const GraphSnapshot& g, const LightGcnConfig& cfg) {
    const auto avg = averaged(p, g, cfg);
    return {avg.slice(0, g.num_users()), avg.slice(g.num_users(), known_items(p, g))};
}

double lightgcn_bpr_loss(const LightGcnParams& p, const GraphSnapshot& g,
                         std::span<const Triple> triples, const LightGcnConfig& cfg) {
    const auto t = lightgcn_tables(p, g, cfg);
    double loss = 0.0;
    for (const auto& tr : triples) {
        const auto u = t.user.row(tr.user);
        loss += softplus(-(dot(u, t.item.row(tr.pos)) - dot(u, t.item.row(tr.neg))));
    }
    return loss;
}

LightGcnGradient lightgcn_grad(const LightGcnParams& p, const GraphSnapshot& g,
                               std::span<const Triple> triples, const LightGcnConfig& cfg) {
    const auto t = lightgcn_tables(p, g, cfg);
    const std::size_t d = p.users.dim();
    const std::uint32_t nu = g.num_users();
    EmbeddingTable d_avg(g.num_nodes(), d);

    LightGcnGradient out;
    for (const auto& tr : triples) {
        const auto u = t.user.row(tr.user);
        const auto qp = t.item.row(tr.pos);
        const auto qn = t.item.row(tr.neg);
        const double s = dot(u, qp) - dot(u, qn);
        out.loss += softplus(-s);
        const double ds = -sigmoid(-s);
        auto du = d_avg.row(tr.user);
        axpy(ds, qp, du);
        axpy(-ds, qn, du);
        axpy(ds, u, d_avg.row(nu + tr.pos));
        axpy(-ds, u, d_avg.row(nu + tr.neg));
    }

    const auto d0 = layer_average_adjoint(d_avg, g, cfg.num_layers, cfg.normalization);
    out.d_users = d0.slice(0, nu);
    out.d_items = EmbeddingTable(p.items.rows(), d);
    const std::size_t item_values = static_cast<std::size_t>(known_items(p, g)) * d;
    std::copy_n(d0.values().begin() + static_cast<std::ptrdiff_t>(nu * d), item_values,
                out.d_items.values().begin());
    return out;
}

LightGcnFit lightgcn_fit(const GraphSnapshot& train, std::span<const EdgeRecord> validation,
                         const LightGcnConfig& cfg, const LightGcnParams* init, FreezeMask freeze,
                         bool evaluate_initial) {
    cfg.validate();
    if (train.num_ui_edges() == 0) throw ConfigError("lightgcn: training graph has no user-item edges");

    LightGcnFit result;
    result.params = init != nullptr ? *init : lightgcn_init(train.num_users(), train.num_items(), cfg);
    if (result.params.users.dim() != static_cast<std::size_t>(cfg.dim)) {
        throw ConfigError("lightgcn: warm-start tables have the wrong dimension");
    }
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    AdamConfig adam_cfg{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay};
    Adam adam_users(result.params.users.values().size(), adam_cfg);
    Adam adam_items(result.params.items.values().size(), adam_cfg);

    std::vector<EdgeRecord> positives;
    for (const auto& e : train.edges()) {
        if (!e.is_social()) positives.push_back(e);
    }

    EvalConfig eval_cfg;
    eval_cfg.cutoffs = {20};
    eval_cfg.cold_start_mode = ColdStartMode::All;
    eval_cfg.keep_per_user = false;
    const EvalTarget target{&train, validation, {}};

    auto step = [&](int) {
        auto triples = sample_triples(positives, train, rng);
        std::shuffle(triples.begin(), triples.end(), rng);
        double total = 0.0;
        const auto bs = static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t begin = 0; begin < triples.size(); begin += bs) {
            const auto batch = std::span<const Triple>(triples).subspan(
                begin, std::min(bs, triples.size() - begin));
            auto grad = lightgcn_grad(result.params, train, batch, cfg);
            total += grad.loss;
            const double scale = 1.0 / static_cast<double>(batch.size());
            if (!freeze.users) {
                for (auto& v : grad.d_users.values()) v *= scale;
                adam_users.step(result.params.users.values(), grad.d_users.values());
            }
            if (!freeze.items) {
                for (auto& v : grad.d_items.values()) v *= scale;
                adam_items.step(result.params.items.values(), grad.d_items.values());
            }
        }
        return triples.empty() ? 0.0 : total / static_cast<double>(triples.size());
    };
    auto validate = [&](const LightGcnParams& params) {
        const auto tables = lightgcn_tables(params, train, cfg);
        const auto scorer = [&](std::uint32_t u, std::span<double> out) {
            const auto uv = tables.user.row(u);
            for (std::size_t w = 0; w < out.size(); ++w) out[w] = dot(uv, tables.item.row(w));
        };
        return evaluate(scorer, static_cast<std::uint32_t>(tables.item.rows()), target, eval_cfg)
            .recall.at(20);
    };

    result.trace = run_with_early_stopping(
        result.params, StopRule{cfg.max_epochs, cfg.patience, evaluate_initial}, step, validate);
    return result;
}

}  // namespace streamrec
