#include "streamrec/replay.hpp"

#include "streamrec/error.hpp"

#include <algorithm>

namespace streamrec {

std::string step_label(std::size_t step) {
    return step == 0 ? "offline" : "t" + std::to_string(step);
}

ItemClasses item_classes(const ReplayData& data) {
    return {data.warm_items, data.streamed_end};
}

MetricsRecord evaluate_model(const Recommender& model, const GraphSnapshot& exclusion,
                             std::span<const EdgeRecord> test_edges, const ItemClasses& classes,
                             const EvalConfig& cfg) {
    const auto scorer = [&](std::uint32_t u, std::span<double> out) { model.score(u, out); };
    return evaluate(scorer, model.scoreable_items(), EvalTarget{&exclusion, test_edges, classes}, cfg);
}

std::vector<StepRecord> run_replay(std::span<const NamedModel> models, const ReplayData& data,
                                   const EvalConfig& cfg) {
    std::vector<StepRecord> out;
    GraphSnapshot g = data.offline_snapshot();
    for (std::size_t k = 0; k < data.num_steps(); ++k) {
        if (k > 0) g = merge_increment(g, data.chunks[k - 1], ExplicitSide::Users, data.step_cutoff(k));
        for (const auto& m : models) {
            m.model->update(g);
            auto rec = evaluate_model(*m.model, g, data.test_edges, item_classes(data), cfg);
            rec.step = step_label(k);
            out.push_back({m.name, k, "incremental", std::move(rec)});
        }
    }
    return out;
}

TrainingData skyline_training_data(const ReplayData& data, std::size_t step) {
    // Step 0 is exactly the offline training split.
    if (step == 0) return {data.train_snapshot(), data.validation_edges};

    std::vector<EdgeRecord> social;
    std::vector<EdgeRecord> ui;
    for (const auto& e : data.edges_through(step)) (e.is_social() ? social : ui).push_back(e);
    TrainingData td;
    td.validation = last_fraction(ui, data.schedule.validation_fraction);
    ui.resize(ui.size() - td.validation.size());
    social.insert(social.end(), ui.begin(), ui.end());
    td.train = GraphSnapshot::from_edges(data.log.num_users, data.snapshot(step).num_items(), social,
                                         data.step_cutoff(step));
    return td;
}

std::vector<StepRecord> run_skyline(std::span<const NamedModel> prototypes, const ReplayData& data,
                                    const EvalConfig& cfg) {
    std::vector<StepRecord> out;
    for (std::size_t k = 0; k < data.num_steps(); ++k) {
        const auto td = skyline_training_data(data, k);
        const auto g = data.snapshot(k);
        for (const auto& p : prototypes) {
            auto model = p.model->fresh();
            model->fit(td);
            model->update(g);
            auto rec = evaluate_model(*model, g, data.test_edges, item_classes(data), cfg);
            rec.step = "skyline@t" + std::to_string(k);
            out.push_back({p.name, k, "skyline", std::move(rec)});
        }
    }
    return out;
}

std::vector<std::vector<EdgeRecord>> probe_buckets(const ReplayData& data) {
    std::vector<EdgeRecord> social;
    std::vector<EdgeRecord> ui;
    for (const auto& e : data.train_edges) (e.is_social() ? social : ui).push_back(e);
    ui.insert(ui.end(), data.validation_edges.begin(), data.validation_edges.end());
    if (ui.size() < 4) throw ScheduleError("probe needs at least four offline user-item edges");

    std::vector<std::vector<EdgeRecord>> buckets(4);
    for (std::size_t b = 0; b < 4; ++b) {
        buckets[b] = social;
        const auto lo = static_cast<std::ptrdiff_t>(b * ui.size() / 4);
        const auto hi = static_cast<std::ptrdiff_t>((b + 1) * ui.size() / 4);
        buckets[b].insert(buckets[b].end(), ui.begin() + lo, ui.begin() + hi);
    }
    return buckets;
}

namespace {

TrainingData bucket_training_data(const ReplayData& data, const std::vector<EdgeRecord>& bucket) {
    std::vector<EdgeRecord> train;
    std::vector<EdgeRecord> ui;
    for (const auto& e : bucket) (e.is_social() ? train : ui).push_back(e);
    TrainingData td;
    td.validation = last_fraction(ui, data.schedule.validation_fraction);
    ui.resize(ui.size() - td.validation.size());
    train.insert(train.end(), ui.begin(), ui.end());
    td.train = GraphSnapshot::from_edges(data.log.num_users, data.warm_items, train,
                                         data.schedule.offline_cutoff());
    return td;
}

}  // namespace

std::vector<ProbeBucket> stationarity_probe(const ReplayData& data, const LightGcnConfig& cfg,
                                            NodeSet fixed_side, const EvalConfig& eval,
                                            bool duplicate_first) {
    auto buckets = probe_buckets(data);
    if (duplicate_first) buckets[1] = buckets[0];
    const auto offline = data.offline_snapshot();
    const FreezeMask freeze{fixed_side == NodeSet::Users, fixed_side == NodeSet::Items};

    std::vector<ProbeBucket> out;
    LightGcnParams first;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        const auto td = bucket_training_data(data, buckets[b]);
        const auto fit = b == 0 ? lightgcn_fit(td.train, td.validation, cfg)
                                : lightgcn_fit(td.train, td.validation, cfg, &first, freeze, true);
        if (b == 0) first = fit.params;

        const auto tables = lightgcn_tables(fit.params, offline, cfg);
        const auto scorer = [&](std::uint32_t u, std::span<double> s) {
            const auto uv = tables.user.row(u);
            for (std::size_t w = 0; w < s.size(); ++w) s[w] = dot(uv, tables.item.row(w));
        };
        ProbeBucket pb;
        pb.label = "D" + std::to_string(b + 1);
        pb.ui_edges = td.train.num_ui_edges() + td.validation.size();
        pb.metrics = evaluate(scorer, static_cast<std::uint32_t>(tables.item.rows()),
                              EvalTarget{&offline, data.test_edges, item_classes(data)}, eval);
        pb.metrics.step = pb.label;
        pb.params = fit.params;
        pb.trace = fit.trace;
        out.push_back(std::move(pb));
    }
    return out;
}

}  // namespace streamrec
