#include "streamrec/recommender.hpp"

#include "streamrec/baselines.hpp"
#include "streamrec/error.hpp"
#include "streamrec/lce.hpp"

#include <fstream>
#include <optional>
#include <set>

namespace streamrec {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Lce: return "lce";
    case ModelKind::LightGcn: return "lightgcn";
    case ModelKind::Als: return "als";
    case ModelKind::Slim: return "slim";
    case ModelKind::Rp3b: return "rp3b";
    case ModelKind::Pop: return "pop";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& name) {
    for (const auto k : {ModelKind::Lce, ModelKind::LightGcn, ModelKind::Als, ModelKind::Slim,
                         ModelKind::Rp3b, ModelKind::Pop}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown model kind '" + name + "'");
}

namespace {

// Pulls typed values out of a parameter object and rejects leftovers.
class ParamReader {
public:
    ParamReader(const json& j, std::string model) : j_(j), model_(std::move(model)) {
        if (!j_.is_null() && !j_.is_object()) throw ConfigError(model_ + ": params must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        used_.insert(key);
        if (j_.is_null() || !j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(model_ + ": parameter '" + key + "' has the wrong type");
        }
    }

    template <class E>
    void get_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
        std::string text;
        for (const auto& [n, v] : names) {
            if (v == out) text = n;
        }
        get(key, text);
        for (const auto& [n, v] : names) {
            if (text == n) {
                out = v;
                return;
            }
        }
        throw ConfigError(model_ + ": parameter '" + key + "' has unknown value '" + text + "'");
    }

    void finish() const {
        if (j_.is_null()) return;
        for (const auto& [key, _] : j_.items()) {
            if (!used_.contains(key)) throw ConfigError(model_ + ": unknown parameter '" + key + "'");
        }
    }

private:
    const json& j_;
    std::string model_;
    std::set<std::string, std::less<>> used_;
};

const std::initializer_list<std::pair<const char*, CompositionKind>> kCompositionNames{
    {"mean", CompositionKind::Mean}, {"sum", CompositionKind::Sum}};
const std::initializer_list<std::pair<const char*, NormalizationKind>> kNormalizationNames{
    {"row_mean", NormalizationKind::RowMean}, {"symmetric_sqrt", NormalizationKind::SymmetricSqrt}};
const std::initializer_list<std::pair<const char*, lce::Direction>> kDirectionNames{
    {"item_compositional", lce::Direction::ItemCompositional},
    {"user_compositional", lce::Direction::UserCompositional}};

template <class E>
std::string enum_name(E v, std::initializer_list<std::pair<const char*, E>> names) {
    for (const auto& [n, x] : names) {
        if (x == v) return n;
    }
    return "?";
}

json table_to_json(const EmbeddingTable& t) {
    return {{"rows", t.rows()}, {"dim", t.dim()}, {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

EmbeddingTable table_from_json(const json& j) {
    return EmbeddingTable(j.at("rows").get<std::size_t>(), j.at("dim").get<std::size_t>(),
                          j.at("values").get<std::vector<double>>());
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", values}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != static_cast<std::size_t>(rows * cols)) {
        throw CheckpointError("matrix value count mismatch");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[i++];
    }
    return m;
}

void score_with(const ScoringTables& t, std::uint32_t user, std::span<double> out) {
    const auto uv = t.user.row(user);
    for (std::size_t w = 0; w < out.size(); ++w) out[w] = dot(uv, t.item.row(w));
}

void require(bool ready, ModelKind kind) {
    if (!ready) throw ConfigError(to_string(kind) + ": model used before fit or load");
}

// ---- LCE -----------------------------------------------------------------

class LceRecommender final : public Recommender {
public:
    explicit LceRecommender(const json& params, std::uint64_t seed) {
        cfg_.seed = seed;
        ParamReader r(params, "lce");
        r.get("dim", cfg_.dim);
        r.get("num_layers", cfg_.num_layers);
        r.get_enum("composition", cfg_.composition, kCompositionNames);
        r.get_enum("normalization", cfg_.normalization, kNormalizationNames);
        r.get("batch_size", cfg_.batch_size);
        r.get("weight_decay", cfg_.weight_decay);
        r.get("learning_rate", cfg_.learning_rate);
        r.get("max_epochs", cfg_.max_epochs);
        r.get("patience", cfg_.patience);
        r.get("target_fraction", cfg_.target_fraction);
        r.get("negatives_per_positive", cfg_.negatives_per_positive);
        r.get("single_embedding", cfg_.variant.single_embedding);
        r.get("single_layer", cfg_.variant.single_layer);
        r.get_enum("direction", cfg_.direction, kDirectionNames);
        r.get("seed", cfg_.seed);
        r.finish();
        cfg_.validate();
    }

    ModelKind kind() const override { return ModelKind::Lce; }

    void fit(const TrainingData& data) override {
        params_ = lce::fit(data.train, data.validation, cfg_).params;
        trained_items_ = data.train.num_items();
        update(data.train);
    }

    void update(const GraphSnapshot& g) override {
        require(params_.has_value(), kind());
        // Under the flipped direction items carry parameters, so items the
        // model has never seen are left out of the graph.
        const bool restrict = cfg_.direction == lce::Direction::UserCompositional &&
                              g.num_items() > trained_items_;
        tables_ = lce::scoring_tables(*params_, restrict ? g.restrict_items(trained_items_) : g, cfg_);
    }

    std::uint32_t scoreable_items() const override {
        return static_cast<std::uint32_t>(tables_.item.rows());
    }
    void score(std::uint32_t user, std::span<double> out) const override { score_with(tables_, user, out); }

    std::size_t param_count() const override {
        require(params_.has_value(), kind());
        return params_->z_agg.values().size() + (params_->z_score ? params_->z_score->values().size() : 0);
    }

    json hyperparams() const override {
        return {{"dim", cfg_.dim},
                {"num_layers", cfg_.num_layers},
                {"composition", enum_name(cfg_.composition, kCompositionNames)},
                {"normalization", enum_name(cfg_.normalization, kNormalizationNames)},
                {"batch_size", cfg_.batch_size},
                {"weight_decay", cfg_.weight_decay},
                {"learning_rate", cfg_.learning_rate},
                {"max_epochs", cfg_.max_epochs},
                {"patience", cfg_.patience},
                {"target_fraction", cfg_.target_fraction},
                {"negatives_per_positive", cfg_.negatives_per_positive},
                {"single_embedding", cfg_.variant.single_embedding},
                {"single_layer", cfg_.variant.single_layer},
                {"direction", enum_name(cfg_.direction, kDirectionNames)},
                {"seed", cfg_.seed}};
    }

    json state() const override {
        require(params_.has_value(), kind());
        json s{{"z_agg", table_to_json(params_->z_agg)}, {"trained_items", trained_items_}};
        if (params_->z_score) s["z_score"] = table_to_json(*params_->z_score);
        return s;
    }

    void load_state(const json& s) override {
        lce::LceParams p;
        p.direction = cfg_.direction;
        p.z_agg = table_from_json(s.at("z_agg"));
        if (s.contains("z_score")) p.z_score = table_from_json(s.at("z_score"));
        if (p.z_score.has_value() == cfg_.variant.single_embedding) {
            throw CheckpointError("lce: scoring table presence does not match the variant");
        }
        trained_items_ = s.at("trained_items").get<std::uint32_t>();
        params_ = std::move(p);
    }

    std::unique_ptr<Recommender> fresh() const override {
        return std::make_unique<LceRecommender>(hyperparams(), cfg_.seed);
    }

private:
    lce::TrainConfig cfg_;
    std::optional<lce::LceParams> params_;
    std::uint32_t trained_items_ = 0;
    ScoringTables tables_;
};

// ---- LightGCN ------------------------------------------------------------

class LightGcnRecommender final : public Recommender {
public:
    LightGcnRecommender(const json& params, std::uint64_t seed)
        : cfg_(lightgcn_config_from_json(params, seed)) {}

    ModelKind kind() const override { return ModelKind::LightGcn; }

    void fit(const TrainingData& data) override {
        params_ = lightgcn_fit(data.train, data.validation, cfg_).params;
        update(data.train);
    }

    void update(const GraphSnapshot& g) override {
        require(params_.has_value(), kind());
        tables_ = lightgcn_tables(*params_, g, cfg_);
    }

    std::uint32_t scoreable_items() const override {
        return static_cast<std::uint32_t>(tables_.item.rows());
    }
    void score(std::uint32_t user, std::span<double> out) const override { score_with(tables_, user, out); }

    std::size_t param_count() const override {
        require(params_.has_value(), kind());
        return params_->users.values().size() + params_->items.values().size();
    }

    json hyperparams() const override {
        return {{"dim", cfg_.dim},
                {"num_layers", cfg_.num_layers},
                {"normalization", enum_name(cfg_.normalization, kNormalizationNames)},
                {"batch_size", cfg_.batch_size},
                {"weight_decay", cfg_.weight_decay},
                {"learning_rate", cfg_.learning_rate},
                {"max_epochs", cfg_.max_epochs},
                {"patience", cfg_.patience},
                {"seed", cfg_.seed}};
    }

    json state() const override {
        require(params_.has_value(), kind());
        return {{"users", table_to_json(params_->users)}, {"items", table_to_json(params_->items)}};
    }

    void load_state(const json& s) override {
        params_ = LightGcnParams{table_from_json(s.at("users")), table_from_json(s.at("items"))};
    }

    std::unique_ptr<Recommender> fresh() const override {
        return std::make_unique<LightGcnRecommender>(hyperparams(), cfg_.seed);
    }

private:
    LightGcnConfig cfg_;
    std::optional<LightGcnParams> params_;
    ScoringTables tables_;
};

// ---- ALS -----------------------------------------------------------------

class AlsRecommender final : public Recommender {
public:
    AlsRecommender(const json& params, std::uint64_t seed) {
        cfg_.seed = seed;
        ParamReader r(params, "als");
        r.get("dim", cfg_.dim);
        r.get("alpha", cfg_.alpha);
        r.get("reg", cfg_.reg);
        r.get("iterations", cfg_.iterations);
        r.get("init_std", cfg_.init_std);
        r.get("seed", cfg_.seed);
        r.finish();
        if (cfg_.dim < 1 || cfg_.reg <= 0.0 || cfg_.iterations < 1) {
            throw ConfigError("als: need dim >= 1, reg > 0, iterations >= 1");
        }
    }

    ModelKind kind() const override { return ModelKind::Als; }

    void fit(const TrainingData& data) override {
        model_ = als_fit(data.train, cfg_).model;
        update(data.train);
    }

    // Fold-in: every column factor is re-solved from the fixed user factors.
    void update(const GraphSnapshot& g) override {
        require(model_.has_value(), kind());
        als_fold_in(*model_, g, cfg_);
    }

    std::uint32_t scoreable_items() const override {
        return model_ ? static_cast<std::uint32_t>(model_->items.rows()) : 0;
    }

    void score(std::uint32_t user, std::span<double> out) const override {
        const auto s = als_scores(*model_, user);
        std::copy_n(s.begin(), out.size(), out.begin());
    }

    std::size_t param_count() const override {
        require(model_.has_value(), kind());
        return static_cast<std::size_t>(model_->users.size() + model_->items.size() + model_->social.size());
    }

    json hyperparams() const override {
        return {{"dim", cfg_.dim},           {"alpha", cfg_.alpha},       {"reg", cfg_.reg},
                {"iterations", cfg_.iterations}, {"init_std", cfg_.init_std}, {"seed", cfg_.seed}};
    }

    json state() const override {
        require(model_.has_value(), kind());
        return {{"users", matrix_to_json(model_->users)},
                {"items", matrix_to_json(model_->items)},
                {"social", matrix_to_json(model_->social)}};
    }

    void load_state(const json& s) override {
        model_ = AlsModel{matrix_from_json(s.at("users")), matrix_from_json(s.at("items")),
                          matrix_from_json(s.at("social"))};
    }

    std::unique_ptr<Recommender> fresh() const override {
        return std::make_unique<AlsRecommender>(hyperparams(), cfg_.seed);
    }

private:
    AlsConfig cfg_;
    std::optional<AlsModel> model_;
};

// ---- SLIM ----------------------------------------------------------------

class SlimRecommender final : public Recommender {
public:
    SlimRecommender(const json& params, std::uint64_t seed) : seed_(seed) {
        ParamReader r(params, "slim");
        r.get("l1", cfg_.l1);
        r.get("l2", cfg_.l2);
        r.get("tolerance", cfg_.tolerance);
        r.get("max_sweeps", cfg_.max_sweeps);
        r.get("seed", seed_);
        r.finish();
        if (cfg_.l1 < 0.0 || cfg_.l2 < 0.0 || cfg_.tolerance <= 0.0 || cfg_.max_sweeps < 1) {
            throw ConfigError("slim: need l1, l2 >= 0, tolerance > 0, max_sweeps >= 1");
        }
    }

    ModelKind kind() const override { return ModelKind::Slim; }

    void fit(const TrainingData& data) override {
        model_ = slim_fit(data.train, cfg_);
        update(data.train);
    }

    void update(const GraphSnapshot& g) override {
        require(model_.has_value(), kind());
        graph_ = g;
    }

    std::uint32_t scoreable_items() const override { return graph_.num_items(); }

    void score(std::uint32_t user, std::span<double> out) const override {
        const auto s = slim_score_row(*model_, graph_.items_of(user), graph_.friends_of(user));
        std::fill(out.begin(), out.end(), 0.0);
        std::copy_n(s.begin(), std::min(s.size(), out.size()), out.begin());
    }

    std::size_t param_count() const override {
        require(model_.has_value(), kind());
        return model_->nonzeros();
    }

    json hyperparams() const override {
        return {{"l1", cfg_.l1}, {"l2", cfg_.l2}, {"tolerance", cfg_.tolerance},
                {"max_sweeps", cfg_.max_sweeps}, {"seed", seed_}};
    }

    json state() const override {
        require(model_.has_value(), kind());
        return {{"num_users", model_->num_users},
                {"num_items", model_->num_items},
                {"coefficients", model_->coefficients}};
    }

    void load_state(const json& s) override {
        SlimModel m;
        m.num_users = s.at("num_users").get<std::uint32_t>();
        m.num_items = s.at("num_items").get<std::uint32_t>();
        m.coefficients = s.at("coefficients").get<decltype(m.coefficients)>();
        if (m.coefficients.size() != m.num_columns()) throw CheckpointError("slim: column count mismatch");
        m.by_source.resize(m.num_columns());
        for (std::uint32_t j = 0; j < m.num_items; ++j) {
            for (const auto& [k, x] : m.coefficients[j]) m.by_source.at(k).emplace_back(j, x);
        }
        model_ = std::move(m);
    }

    std::unique_ptr<Recommender> fresh() const override {
        return std::make_unique<SlimRecommender>(hyperparams(), seed_);
    }

private:
    SlimConfig cfg_;
    std::uint64_t seed_;
    std::optional<SlimModel> model_;
    GraphSnapshot graph_;
};

// ---- RP3beta -------------------------------------------------------------

class Rp3bRecommender final : public Recommender {
public:
    Rp3bRecommender(const json& params, std::uint64_t seed) : seed_(seed) {
        ParamReader r(params, "rp3b");
        r.get("beta", cfg_.beta);
        r.get("top_k", cfg_.top_k);
        r.get("seed", seed_);
        r.finish();
        if (cfg_.beta < 0.0) throw ConfigError("rp3b: beta must be >= 0");
    }

    ModelKind kind() const override { return ModelKind::Rp3b; }
    void fit(const TrainingData& data) override { update(data.train); }
    void update(const GraphSnapshot& g) override { graph_ = g; }
    std::uint32_t scoreable_items() const override { return graph_.num_items(); }

    void score(std::uint32_t user, std::span<double> out) const override {
        const auto s = rp3b_scores(graph_, user, cfg_);
        std::copy_n(s.begin(), out.size(), out.begin());
    }

    std::size_t param_count() const override { return 0; }
    json hyperparams() const override { return {{"beta", cfg_.beta}, {"top_k", cfg_.top_k}, {"seed", seed_}}; }
    json state() const override { return json::object(); }
    void load_state(const json&) override {}
    std::unique_ptr<Recommender> fresh() const override {
        return std::make_unique<Rp3bRecommender>(hyperparams(), seed_);
    }

private:
    Rp3bConfig cfg_;
    std::uint64_t seed_;
    GraphSnapshot graph_;
};

// ---- popularity ----------------------------------------------------------

class PopRecommender final : public Recommender {
public:
    PopRecommender(const json& params, std::uint64_t seed) : seed_(seed) {
        ParamReader r(params, "pop");
        r.get("seed", seed_);
        r.finish();
    }

    ModelKind kind() const override { return ModelKind::Pop; }
    void fit(const TrainingData& data) override { update(data.train); }
    void update(const GraphSnapshot& g) override { model_ = pop_from_snapshot(g); }
    std::uint32_t scoreable_items() const override {
        return static_cast<std::uint32_t>(model_.counts.size());
    }

    void score(std::uint32_t, std::span<double> out) const override {
        for (std::size_t w = 0; w < out.size(); ++w) out[w] = static_cast<double>(model_.counts[w]);
    }

    std::size_t param_count() const override { return 0; }
    json hyperparams() const override { return {{"seed", seed_}}; }
    json state() const override { return json::object(); }
    void load_state(const json&) override {}
    std::unique_ptr<Recommender> fresh() const override {
        return std::make_unique<PopRecommender>(hyperparams(), seed_);
    }

private:
    std::uint64_t seed_;
    PopModel model_;
};

}  // namespace

LightGcnConfig lightgcn_config_from_json(const json& params, std::uint64_t seed) {
    LightGcnConfig cfg;
    cfg.seed = seed;
    ParamReader r(params, "lightgcn");
    r.get("dim", cfg.dim);
    r.get("num_layers", cfg.num_layers);
    r.get_enum("normalization", cfg.normalization, kNormalizationNames);
    r.get("batch_size", cfg.batch_size);
    r.get("weight_decay", cfg.weight_decay);
    r.get("learning_rate", cfg.learning_rate);
    r.get("max_epochs", cfg.max_epochs);
    r.get("patience", cfg.patience);
    r.get("seed", cfg.seed);
    r.finish();
    cfg.validate();
    return cfg;
}

std::unique_ptr<Recommender> make_recommender(ModelKind kind, const json& params, std::uint64_t seed) {
    switch (kind) {
    case ModelKind::Lce: return std::make_unique<LceRecommender>(params, seed);
    case ModelKind::LightGcn: return std::make_unique<LightGcnRecommender>(params, seed);
    case ModelKind::Als: return std::make_unique<AlsRecommender>(params, seed);
    case ModelKind::Slim: return std::make_unique<SlimRecommender>(params, seed);
    case ModelKind::Rp3b: return std::make_unique<Rp3bRecommender>(params, seed);
    case ModelKind::Pop: return std::make_unique<PopRecommender>(params, seed);
    }
    throw ConfigError("unknown model kind");
}

void save_checkpoint(const std::filesystem::path& path, const std::string& name,
                     const Recommender& model, const InteractionLog& ids) {
    const json j{{"format", "streamrec-checkpoint"},
                 {"version", 1},
                 {"name", name},
                 {"kind", to_string(model.kind())},
                 {"hyperparams", model.hyperparams()},
                 {"state", model.state()},
                 {"user_ids", ids.user_ids},
                 {"item_ids", ids.item_ids}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("format") != "streamrec-checkpoint" || j.at("version") != 1) {
            throw CheckpointError(path.string() + ": not a version-1 checkpoint");
        }
        Checkpoint c;
        c.name = j.at("name").get<std::string>();
        c.model = make_recommender(parse_model_kind(j.at("kind").get<std::string>()),
                                   j.at("hyperparams"), 0);
        c.model->load_state(j.at("state"));
        c.user_ids = j.at("user_ids").get<std::vector<std::string>>();
        c.item_ids = j.at("item_ids").get<std::vector<std::string>>();
        return c;
    } catch (const json::exception& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
}

}  // namespace streamrec
