#include "streamrec/lce.hpp"

#include "streamrec/error.hpp"
#include "streamrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace streamrec {

std::vector<Triple> sample_triples(std::span<const EdgeRecord> positives, const GraphSnapshot& train,
                                   std::mt19937_64& rng, int negatives_per_positive) {
    std::vector<Triple> triples;
    triples.reserve(positives.size() * static_cast<std::size_t>(negatives_per_positive));
    const std::uint32_t n_items = train.num_items();
    if (n_items == 0) return triples;
    std::uniform_int_distribution<std::uint32_t> pick(0, n_items - 1);
    for (const auto& e : positives) {
        const std::uint32_t u = e.src.index;
        if (train.user_item_degree(u) >= n_items) continue;
        for (int k = 0; k < negatives_per_positive; ++k) {
            std::uint32_t neg = pick(rng);
            while (train.has_ui(u, neg)) neg = pick(rng);
            triples.push_back({u, e.dst.index, neg});
        }
    }
    return triples;
}

namespace lce {

void TrainConfig::validate() const {
    if (dim < 1) throw ConfigError("lce: dim must be >= 1");
    if (num_layers < 1) throw ConfigError("lce: num_layers must be >= 1");
    if (batch_size < 1) throw ConfigError("lce: batch_size must be >= 1");
    if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
        throw ConfigError("lce: target_fraction must lie in (0, 1)");
    }
    if (max_epochs < 1 || patience < 1) throw ConfigError("lce: max_epochs and patience must be >= 1");
    if (negatives_per_positive < 1) throw ConfigError("lce: negatives_per_positive must be >= 1");
    if (learning_rate < 0.0 || weight_decay < 0.0) {
        throw ConfigError("lce: learning_rate and weight_decay must be non-negative");
    }
}

LceParams init_params(const TrainConfig& cfg, std::uint32_t num_explicit_nodes) {
    if (num_explicit_nodes == 0) throw ConfigError("lce: no explicit nodes to embed");
    const auto d = static_cast<std::size_t>(cfg.dim);
    const double bound = std::sqrt(6.0 / static_cast<double>(num_explicit_nodes + d));
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-bound, bound);

    LceParams p;
    p.direction = cfg.direction;
    p.z_agg = EmbeddingTable(num_explicit_nodes, d);
    for (auto& v : p.z_agg.values()) v = dist(rng);
    if (!cfg.variant.single_embedding) {
        p.z_score = EmbeddingTable(num_explicit_nodes, d);
        for (auto& v : p.z_score->values()) v = dist(rng);
    }
    return p;
}

namespace {

std::uint32_t explicit_count(const GraphSnapshot& g, const TrainConfig& cfg) {
    return cfg.explicit_side() == NodeSet::Users ? g.num_users() : g.num_items();
}

void check_explicit_rows(const LceParams& params, const GraphSnapshot& g, const TrainConfig& cfg) {
    const auto expected = explicit_count(g, cfg);
    if (params.num_explicit() != expected) {
        throw InductiveViolation(
            "graph has " + std::to_string(expected) + " explicit-side nodes but the model embeds " +
            std::to_string(params.num_explicit()));
    }
}

EmbeddingTable averaged_layers(const LceParams& params, const GraphSnapshot& g,
                               const TrainConfig& cfg) {
    auto stack = propagate_layers(initial_layer(params.z_agg, g, cfg.composition, cfg.explicit_side()),
                                  g, cfg.effective_layers(), cfg.normalization);
    return layer_average_all(stack);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

ScoringTables scoring_tables(const LceParams& params, const GraphSnapshot& graph,
                             const TrainConfig& cfg) {
    check_explicit_rows(params, graph, cfg);
    const auto avg = averaged_layers(params, graph, cfg);
    const std::uint32_t nu = graph.num_users();
    ScoringTables t;
    if (cfg.direction == Direction::ItemCompositional) {
        t.user = params.z_score ? *params.z_score : avg.slice(0, nu);
        t.item = avg.slice(nu, graph.num_items());
    } else {
        t.user = avg.slice(0, nu);
        t.item = params.z_score ? *params.z_score : avg.slice(nu, graph.num_items());
    }
    return t;
}

double score(std::span<const double> user_vec, std::span<const double> item_vec) {
    return sigmoid(dot(user_vec, item_vec));
}

std::vector<std::uint32_t> score_all(const ScoringTables& tables, std::uint32_t user,
                                     std::span<const std::uint32_t> exclude) {
    std::vector<double> scores(tables.item.rows());
    const auto u = tables.user.row(user);
    for (std::size_t w = 0; w < scores.size(); ++w) scores[w] = dot(u, tables.item.row(w));
    return rank_items(user, scores, exclude).items;
}

ReconstructionSplit sample_reconstruction_split(const GraphSnapshot& train, double rho,
                                                std::mt19937_64& rng) {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("target fraction must lie in (0, 1)");
    auto all = train.edges();
    std::vector<std::size_t> ui;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!all[i].is_social()) ui.push_back(i);
    }
    const auto n_targets = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(ui.size())));
    // partial Fisher-Yates
    for (std::size_t i = 0; i < n_targets; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, ui.size() - 1);
        std::swap(ui[i], ui[pick(rng)]);
    }
    std::vector<char> is_target(all.size(), 0);
    ReconstructionSplit split;
    split.targets.reserve(n_targets);
    for (std::size_t i = 0; i < n_targets; ++i) {
        is_target[ui[i]] = 1;
        split.targets.push_back(all[ui[i]]);
    }
    std::vector<EdgeRecord> input;
    input.reserve(all.size() - n_targets);
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!is_target[i]) input.push_back(all[i]);
    }
    split.input = GraphSnapshot::from_edges(train.num_users(), train.num_items(), input, train.cutoff());
    return split;
}

double bpr_loss(const LceParams& params, const GraphSnapshot& input,
                std::span<const Triple> triples, const TrainConfig& cfg) {
    const auto t = scoring_tables(params, input, cfg);
    double loss = 0.0;
    for (const auto& tr : triples) {
        const auto p = t.user.row(tr.user);
        loss += softplus(-(dot(p, t.item.row(tr.pos)) - dot(p, t.item.row(tr.neg))));
    }
    return loss;
}

Gradient grad_bpr(const LceParams& params, const GraphSnapshot& input,
                  std::span<const Triple> triples, const TrainConfig& cfg) {
    const auto t = scoring_tables(params, input, cfg);
    const std::size_t d = params.dim();
    EmbeddingTable d_user(t.user.rows(), d);
    EmbeddingTable d_item(t.item.rows(), d);

    Gradient g;
    for (const auto& tr : triples) {
        const auto p = t.user.row(tr.user);
        const auto qp = t.item.row(tr.pos);
        const auto qn = t.item.row(tr.neg);
        const double s = dot(p, qp) - dot(p, qn);
        g.loss += softplus(-s);
        const double ds = -sigmoid(-s);
        auto du = d_user.row(tr.user);
        axpy(ds, qp, du);
        axpy(-ds, qn, du);
        axpy(ds, p, d_item.row(tr.pos));
        axpy(-ds, p, d_item.row(tr.neg));
    }

    // Route the per-side gradients to the explicit scoring table or to the
    // layer average.
    const std::uint32_t nu = input.num_users();
    EmbeddingTable d_avg(input.num_nodes(), d);
    auto add_rows = [&](const EmbeddingTable& src, std::size_t offset) {
        std::copy(src.values().begin(), src.values().end(),
                  d_avg.values().begin() + static_cast<std::ptrdiff_t>(offset * d));
    };
    const bool items_composed = cfg.direction == Direction::ItemCompositional;
    if (items_composed) {
        add_rows(d_item, nu);
        if (params.z_score) g.d_score = std::move(d_user);
        else add_rows(d_user, 0);
    } else {
        add_rows(d_user, 0);
        if (params.z_score) g.d_score = std::move(d_item);
        else add_rows(d_item, nu);
    }

    const auto d_layer0 = layer_average_adjoint(d_avg, input, cfg.effective_layers(), cfg.normalization);
    g.d_agg = initial_layer_adjoint(d_layer0, input, cfg.composition, cfg.explicit_side());
    return g;
}

FitResult fit(const GraphSnapshot& train, std::span<const EdgeRecord> validation,
              const TrainConfig& cfg) {
    cfg.validate();
    if (train.num_ui_edges() == 0) throw ConfigError("lce: training graph has no user-item edges");

    FitResult result;
    result.params = init_params(cfg, explicit_count(train, cfg));
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    AdamConfig adam_cfg{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay};
    Adam adam_agg(result.params.z_agg.values().size(), adam_cfg);
    Adam adam_score(result.params.z_score ? result.params.z_score->values().size() : 0, adam_cfg);

    EvalConfig eval_cfg;
    eval_cfg.cutoffs = {20};
    eval_cfg.cold_start_mode = ColdStartMode::All;
    eval_cfg.keep_per_user = false;
    const EvalTarget target{&train, validation, {}};

    auto step = [&](int) {
        auto split = sample_reconstruction_split(train, cfg.target_fraction, rng);
        auto triples = sample_triples(split.targets, train, rng, cfg.negatives_per_positive);
        std::shuffle(triples.begin(), triples.end(), rng);
        double total = 0.0;
        const auto bs = static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t begin = 0; begin < triples.size(); begin += bs) {
            const auto batch = std::span<const Triple>(triples).subspan(
                begin, std::min(bs, triples.size() - begin));
            auto grad = grad_bpr(result.params, split.input, batch, cfg);
            total += grad.loss;
            const double scale = 1.0 / static_cast<double>(batch.size());
            for (auto& v : grad.d_agg.values()) v *= scale;
            adam_agg.step(result.params.z_agg.values(), grad.d_agg.values());
            if (result.params.z_score) {
                for (auto& v : grad.d_score->values()) v *= scale;
                adam_score.step(result.params.z_score->values(), grad.d_score->values());
            }
        }
        return triples.empty() ? 0.0 : total / static_cast<double>(triples.size());
    };
    auto validate = [&](const LceParams& params) {
        const auto tables = scoring_tables(params, train, cfg);
        const auto scorer = [&](std::uint32_t u, std::span<double> out) {
            const auto uv = tables.user.row(u);
            for (std::size_t w = 0; w < out.size(); ++w) out[w] = dot(uv, tables.item.row(w));
        };
        return evaluate(scorer, static_cast<std::uint32_t>(tables.item.rows()), target, eval_cfg)
            .recall.at(20);
    };

    result.trace = run_with_early_stopping(result.params, StopRule{cfg.max_epochs, cfg.patience, false},
                                           step, validate);
    return result;
}

EmbeddingTable incremental_update(const LceParams& params, const GraphSnapshot& new_graph,
                                  const TrainConfig& cfg) {
    check_explicit_rows(params, new_graph, cfg);
    return full_compose(params.z_agg, new_graph, cfg.composition, cfg.effective_layers(),
                        cfg.normalization, cfg.explicit_side());
}

std::size_t param_count(const TrainConfig& cfg, std::size_t num_users, std::size_t num_items) {
    const std::size_t tables = cfg.variant.single_embedding ? 1 : 2;
    const std::size_t rows = cfg.direction == Direction::ItemCompositional ? num_users : num_items;
    return tables * rows * static_cast<std::size_t>(cfg.dim);
}

std::size_t lightgcn_param_count(std::size_t num_users, std::size_t num_items, std::size_t dim) {
    return (num_users + num_items) * dim;
}

int flip_direction_dim(int d_item, std::size_t num_users, std::size_t num_items, bool larger) {
    if (num_users == 0 || num_items == 0) throw std::invalid_argument("node counts must be positive");
    const double ratio = static_cast<double>(num_users) / static_cast<double>(num_items);
    const int d = std::max(1, static_cast<int>(std::lround(ratio * d_item)));
    return larger ? 2 * d : d;
}

}  // namespace lce
}  // namespace streamrec
