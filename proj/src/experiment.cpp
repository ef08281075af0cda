#include "streamrec/experiment.hpp"

#include "streamrec/error.hpp"
#include "streamrec/lce.hpp"
#include "streamrec/replay.hpp"
#include "streamrec/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace streamrec {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": '" + key + "' has the wrong type");
    }
}

const std::map<std::string, ColdStartMode> kModeNames{
    {"exclude", ColdStartMode::Exclude}, {"only", ColdStartMode::Only}, {"all", ColdStartMode::All}};

std::string mode_name(ColdStartMode m) {
    for (const auto& [n, v] : kModeNames) {
        if (v == m) return n;
    }
    return "?";
}

bool valid_name(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

// Value sets the hyperparameter search draws from.
const std::map<std::pair<ModelKind, std::string>, std::vector<double>> kGridSets{
    {{ModelKind::Lce, "dim"}, {16, 32, 64, 128, 256, 512}},
    {{ModelKind::Lce, "batch_size"}, {2048, 5000, 10000}},
    {{ModelKind::Lce, "weight_decay"}, {1e-3, 1e-4, 1e-5}},
    {{ModelKind::LightGcn, "dim"}, {16, 32, 64, 128, 256, 512}},
    {{ModelKind::LightGcn, "batch_size"}, {2048, 5000, 10000}},
    {{ModelKind::LightGcn, "weight_decay"}, {1e-3, 1e-4, 1e-5}},
    {{ModelKind::Als, "dim"}, {32, 64, 128, 256, 512}},
    {{ModelKind::Rp3b, "top_k"}, {50, 100, 200, 500}},
    {{ModelKind::Slim, "l1"}, {0.01, 0.1, 0.5, 1, 2, 5, 10}},
    {{ModelKind::Slim, "l2"}, {0.1, 0.5, 1, 2, 5, 10, 20}},
};

void validate_grid(const ModelSpec& m) {
    const std::string where = "model '" + m.name + "' grid";
    if (!m.grid.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, values] : m.grid.items()) {
        if (!values.is_array() || values.empty()) {
            throw ConfigError(where + ": '" + key + "' needs a non-empty list");
        }
        const auto set = kGridSets.find({m.kind, key});
        if (set == kGridSets.end()) continue;
        for (const auto& v : values) {
            if (!v.is_number() ||
                std::find(set->second.begin(), set->second.end(), v.get<double>()) == set->second.end()) {
                throw ConfigError(where + ": " + v.dump() + " is not a searchable value for '" + key + "'");
            }
        }
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::string fmt_value(double v) { return fmt::format("{}", v); }

EvalConfig eval_config(const ExperimentConfig& cfg) {
    return {cfg.eval.cutoffs, cfg.eval.cold_start_mode, cfg.eval.per_user};
}

struct LoadedModel {
    std::string name;
    std::unique_ptr<Recommender> model;
};

std::vector<LoadedModel> load_models(const ExperimentConfig& cfg, const ReplayData& data) {
    std::vector<LoadedModel> out;
    for (const auto& entry : cfg.models) {
        const fs::path path = fs::path(cfg.output_dir) / (entry.name + ".ckpt.json");
        if (!fs::exists(path)) {
            throw CheckpointError("no checkpoint for model '" + entry.name + "' at " + path.string() +
                                  "; run train first");
        }
        auto ck = load_checkpoint(path);
        if (ck.user_ids != data.log.user_ids || ck.item_ids != data.log.item_ids) {
            throw CheckpointError("checkpoint for model '" + entry.name + "' was trained on different data");
        }
        out.push_back({entry.name, std::move(ck.model)});
    }
    return out;
}

std::vector<NamedModel> named(const std::vector<LoadedModel>& models) {
    std::vector<NamedModel> out;
    for (const auto& m : models) out.push_back({m.name, m.model.get()});
    return out;
}

void for_each_metric(const MetricsRecord& rec,
                     const std::function<void(const char*, int, double)>& visit) {
    for (const auto& [n, v] : rec.recall) visit("recall", n, v);
    for (const auto& [n, v] : rec.ndcg) visit("ndcg", n, v);
    for (const auto& [n, v] : rec.precision) visit("precision", n, v);
}

void write_replay_outputs(const ExperimentConfig& cfg, const ReplayData& data,
                          const std::vector<StepRecord>& records) {
    const fs::path dir(cfg.output_dir);
    auto metrics = open_output(dir / "metrics.csv");
    metrics << "model,step,metric,N,value,users_evaluated\n";
    auto curves = open_output(dir / "curves.csv");
    curves << "step_index,model,mode,metric,value\n";
    for (const auto& r : records) {
        for_each_metric(r.metrics, [&](const char* metric, int n, double v) {
            metrics << fmt::format("{},{},{},{},{},{}\n", r.model, r.metrics.step, metric, n, fmt_value(v),
                                   r.metrics.users_evaluated);
            if (std::string_view(metric) != "precision") {
                curves << fmt::format("{},{},{},{}@{},{}\n", r.step_index, r.model, r.mode, metric, n,
                                      fmt_value(v));
            }
        });
    }
    if (!cfg.eval.per_user) return;
    auto per_user = open_output(dir / "per_user.csv");
    per_user << "model,step,user,metric,N,value\n";
    for (const auto& r : records) {
        const auto& m = r.metrics;
        auto dump = [&](const char* metric, const std::map<int, std::vector<double>>& by_n) {
            for (const auto& [n, values] : by_n) {
                for (std::size_t i = 0; i < values.size(); ++i) {
                    per_user << fmt::format("{},{},{},{},{},{}\n", r.model, m.step,
                                            csv_field(data.log.user_ids[m.users[i]]), metric, n,
                                            fmt_value(values[i]));
                }
            }
        };
        dump("recall", m.recall_per_user);
        dump("ndcg", m.ndcg_per_user);
        dump("precision", m.precision_per_user);
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

// Rows keyed by header name; a missing file yields nullopt.
std::optional<std::vector<std::map<std::string, std::string>>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line)) return std::vector<std::map<std::string, std::string>>{};
    const auto header = split_csv_line(line);
    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) throw IoError(path.string() + ": ragged row");
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

WindowSpec ScheduleConfig::windows() const {
    Timestamp scale = 0;
    if (unit == "seconds") scale = 1;
    else if (unit == "days") scale = kSecondsPerDay;
    else if (unit == "months") scale = kSecondsPerMonth;
    else throw ConfigError("schedule unit must be seconds, days or months");
    return {offline * scale, streaming * scale, test * scale, num_chunks, validation_fraction};
}

ExperimentConfig parse_experiment_config(const json& j) {
    check_keys(j, {"data", "kcore", "schedule", "models", "eval", "seed", "output_dir"}, "config");
    ExperimentConfig cfg;
    if (!j.contains("data")) throw ConfigError("config: 'data' is required");
    const auto& data = j.at("data");
    check_keys(data, {"path", "format"}, "data");
    read(data, "path", cfg.data_path, "data");
    read(data, "format", cfg.data_format, "data");
    if (cfg.data_format != "tsv") throw ConfigError("data: only the tsv format is supported");
    read(j, "kcore", cfg.kcore, "config");
    read(j, "seed", cfg.seed, "config");
    read(j, "output_dir", cfg.output_dir, "config");

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        check_keys(s, {"unit", "offline", "streaming", "test", "num_chunks", "validation_fraction"},
                   "schedule");
        read(s, "unit", cfg.schedule.unit, "schedule");
        read(s, "offline", cfg.schedule.offline, "schedule");
        read(s, "streaming", cfg.schedule.streaming, "schedule");
        read(s, "test", cfg.schedule.test, "schedule");
        read(s, "num_chunks", cfg.schedule.num_chunks, "schedule");
        read(s, "validation_fraction", cfg.schedule.validation_fraction, "schedule");
    }
    (void)cfg.schedule.windows();  // unit check

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        check_keys(e, {"cutoffs", "cold_start_mode", "skyline", "per_user"}, "eval");
        read(e, "cutoffs", cfg.eval.cutoffs, "eval");
        std::string mode = mode_name(cfg.eval.cold_start_mode);
        read(e, "cold_start_mode", mode, "eval");
        if (!kModeNames.contains(mode)) throw ConfigError("eval: unknown cold_start_mode '" + mode + "'");
        cfg.eval.cold_start_mode = kModeNames.at(mode);
        read(e, "skyline", cfg.eval.skyline, "eval");
        read(e, "per_user", cfg.eval.per_user, "eval");
    }
    if (cfg.eval.cutoffs.empty()) throw ConfigError("eval: cutoffs must not be empty");
    for (const int n : cfg.eval.cutoffs) {
        if (n < 1) throw ConfigError("eval: cutoffs must be >= 1");
    }

    if (!j.contains("models") || !j.at("models").is_array()) {
        throw ConfigError("config: 'models' must be a list");
    }
    std::set<std::string> names;
    for (const auto& m : j.at("models")) {
        check_keys(m, {"name", "kind", "params", "grid"}, "model");
        ModelSpec entry;
        std::string kind;
        read(m, "kind", kind, "model");
        entry.kind = parse_model_kind(kind);
        entry.name = kind;
        read(m, "name", entry.name, "model");
        if (!valid_name(entry.name)) throw ConfigError("model name '" + entry.name + "' is not a plain identifier");
        if (!names.insert(entry.name).second) throw ConfigError("duplicate model name '" + entry.name + "'");
        if (m.contains("params")) entry.params = m.at("params");
        if (m.contains("grid")) entry.grid = m.at("grid");
        if (!entry.params.is_object()) throw ConfigError("model '" + entry.name + "': params must be an object");
        validate_grid(entry);
        for (const auto& p : expand_grid(entry)) (void)make_recommender(entry.kind, p, cfg.seed);
        cfg.models.push_back(std::move(entry));
    }
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json models = json::array();
    for (const auto& m : cfg.models) {
        models.push_back({{"name", m.name}, {"kind", to_string(m.kind)}, {"params", m.params}, {"grid", m.grid}});
    }
    return {{"data", {{"path", cfg.data_path}, {"format", cfg.data_format}}},
            {"kcore", cfg.kcore},
            {"schedule",
             {{"unit", cfg.schedule.unit},
              {"offline", cfg.schedule.offline},
              {"streaming", cfg.schedule.streaming},
              {"test", cfg.schedule.test},
              {"num_chunks", cfg.schedule.num_chunks},
              {"validation_fraction", cfg.schedule.validation_fraction}}},
            {"models", models},
            {"eval",
             {{"cutoffs", cfg.eval.cutoffs},
              {"cold_start_mode", mode_name(cfg.eval.cold_start_mode)},
              {"skyline", cfg.eval.skyline},
              {"per_user", cfg.eval.per_user}}},
            {"seed", cfg.seed},
            {"output_dir", cfg.output_dir}};
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    try {
        return parse_experiment_config(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts) {
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;
    if (!opts.models.empty()) {
        std::vector<ModelSpec> kept;
        for (const auto& name : opts.models) {
            const auto it = std::find_if(cfg.models.begin(), cfg.models.end(),
                                         [&](const ModelSpec& m) { return m.name == name; });
            if (it == cfg.models.end()) throw ConfigError("no model named '" + name + "' in the config");
            kept.push_back(*it);
        }
        cfg.models = std::move(kept);
    }
    return cfg;
}

std::vector<json> expand_grid(const ModelSpec& entry) {
    std::vector<json> out{entry.params.is_null() ? json::object() : entry.params};
    for (const auto& [key, values] : entry.grid.items()) {
        std::vector<json> next;
        for (const auto& base : out) {
            for (const auto& v : values) {
                json p = base;
                p[key] = v;
                next.push_back(std::move(p));
            }
        }
        out = std::move(next);
    }
    return out;
}

ReplayData prepare_data(const ExperimentConfig& cfg) {
    if (cfg.data_path.empty()) throw ConfigError("data.path is empty");
    if (!fs::exists(cfg.data_path)) throw IoError("data file not found: " + cfg.data_path);
    auto log = load_edge_log(cfg.data_path);
    if (cfg.kcore > 0) log = k_core_filter(log, cfg.kcore);
    const auto schedule = build_replay_schedule(log, cfg.schedule.windows());
    return materialize_replay(log, schedule);
}

void cmd_train(const ExperimentConfig& cfg) {
    const auto data = prepare_data(cfg);
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    const TrainingData td{data.train_snapshot(), data.validation_edges};
    const EvalConfig validation_cfg{{20}, ColdStartMode::All, false};

    auto grid = open_output(dir / "grid.csv");
    grid << "model,candidate,params,validation_recall@20,selected\n";
    auto info = open_output(dir / "model_info.csv");
    info << "model,kind,param_count,num_users,num_items,dim\n";

    for (const auto& entry : cfg.models) {
        const auto candidates = expand_grid(entry);
        std::vector<double> scores;
        std::unique_ptr<Recommender> best;
        std::size_t best_index = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            auto model = make_recommender(entry.kind, candidates[i], cfg.seed);
            model->fit(td);
            const double recall =
                evaluate_model(*model, td.train, td.validation, {}, validation_cfg).recall.at(20);
            scores.push_back(recall);
            if (!best || recall > scores[best_index]) {
                best = std::move(model);
                best_index = i;
            }
        }
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            grid << fmt::format("{},{},{},{},{}\n", entry.name, i, csv_field(candidates[i].dump()),
                                fmt_value(scores[i]), i == best_index ? 1 : 0);
        }
        save_checkpoint(dir / (entry.name + ".ckpt.json"), entry.name, *best, data.log);
        const auto hp = best->hyperparams();
        info << fmt::format("{},{},{},{},{},{}\n", entry.name, to_string(entry.kind), best->param_count(),
                            td.train.num_users(), td.train.num_items(),
                            hp.contains("dim") ? hp.at("dim").dump() : "");
    }
}

void cmd_replay(const ExperimentConfig& cfg, bool force_skyline) {
    const auto data = prepare_data(cfg);
    auto models = load_models(cfg, data);
    const auto ec = eval_config(cfg);
    const auto named_models = named(models);
    auto records = run_replay(named_models, data, ec);
    if (cfg.eval.skyline || force_skyline) {
        auto sky = run_skyline(named_models, data, ec);
        records.insert(records.end(), std::make_move_iterator(sky.begin()), std::make_move_iterator(sky.end()));
    }
    write_replay_outputs(cfg, data, records);
}

void cmd_coldstart(const ExperimentConfig& cfg) {
    const auto data = prepare_data(cfg);
    auto models = load_models(cfg, data);
    auto ec = eval_config(cfg);
    ec.cold_start_mode = ColdStartMode::Only;
    ec.keep_per_user = false;
    const auto records = run_replay(named(models), data, ec);

    auto out = open_output(fs::path(cfg.output_dir) / "coldstart.csv");
    out << "model,step,metric,N,value,users_evaluated,unscoreable_relevant\n";
    for (const auto& r : records) {
        for_each_metric(r.metrics, [&](const char* metric, int n, double v) {
            out << fmt::format("{},{},{},{},{},{},{}\n", r.model, r.metrics.step, metric, n, fmt_value(v),
                               r.metrics.users_evaluated, r.metrics.unscoreable_relevant);
        });
    }
}

void cmd_probe(const ExperimentConfig& cfg) {
    const auto data = prepare_data(cfg);
    json params = json::object();
    for (const auto& m : cfg.models) {
        if (m.kind == ModelKind::LightGcn) {
            params = m.params;
            break;
        }
    }
    const auto lgcn = lightgcn_config_from_json(params, cfg.seed);
    auto ec = eval_config(cfg);
    ec.keep_per_user = false;

    fs::create_directories(cfg.output_dir);
    auto out = open_output(fs::path(cfg.output_dir) / "probe.csv");
    out << "run,fixed_side,bucket,ui_edges,metric,N,value,users_evaluated\n";
    struct Run {
        const char* name;
        NodeSet side;
        bool duplicate;
    };
    for (const Run run : {Run{"fix_users", NodeSet::Users, false}, Run{"fix_items", NodeSet::Items, false},
                          Run{"control", NodeSet::Users, true}}) {
        const auto buckets = stationarity_probe(data, lgcn, run.side, ec, run.duplicate);
        for (const auto& b : buckets) {
            for_each_metric(b.metrics, [&](const char* metric, int n, double v) {
                out << fmt::format("{},{},{},{},{},{},{},{}\n", run.name,
                                   run.side == NodeSet::Users ? "users" : "items", b.label, b.ui_edges, metric,
                                   n, fmt_value(v), b.metrics.users_evaluated);
            });
        }
    }
}

std::string cmd_report(const fs::path& run_dir) {
    const auto metrics = read_csv(run_dir / "metrics.csv");
    if (!metrics || metrics->empty()) {
        throw EmptyEvaluationError("no metric rows in " + (run_dir / "metrics.csv").string());
    }
    std::ostringstream os;

    // Best model per (step, metric, N), in file order.
    os << "best model per metric\n";
    std::vector<std::string> keys;
    std::map<std::string, std::pair<std::string, double>> best;
    for (const auto& row : *metrics) {
        const auto key = row.at("step") + " " + row.at("metric") + "@" + row.at("N");
        const double v = std::stod(row.at("value"));
        const auto it = best.find(key);
        if (it == best.end()) {
            keys.push_back(key);
            best[key] = {row.at("model"), v};
        } else if (v > it->second.second) {
            it->second = {row.at("model"), v};
        }
    }
    for (const auto& k : keys) os << fmt::format("  {:<28} {:<16} {:.6f}\n", k, best[k].first, best[k].second);

    // Parameter counts.
    const auto info = read_csv(run_dir / "model_info.csv");
    std::map<std::string, std::string> kind_of;
    os << "\nparameter counts\n";
    if (!info) {
        os << "  model_info.csv not found; skipped\n";
    } else {
        std::optional<std::map<std::string, std::string>> lce_row;
        for (const auto& row : *info) {
            kind_of[row.at("model")] = row.at("kind");
            os << fmt::format("  {:<16} {:<10} {}\n", row.at("model"), row.at("kind"), row.at("param_count"));
            if (row.at("kind") == "lce" && !lce_row) lce_row = row;
        }
        if (lce_row && !lce_row->at("dim").empty()) {
            const auto nu = std::stoull(lce_row->at("num_users"));
            const auto nw = std::stoull(lce_row->at("num_items"));
            const auto d = std::stoull(lce_row->at("dim"));
            const auto full = lce::lightgcn_param_count(nu, nw, d);
            const auto lce_params = std::stoull(lce_row->at("param_count"));
            os << fmt::format("  lightgcn/lce parameter ratio at d={}: {}/{} = {:.4f}\n", d, full, lce_params,
                              static_cast<double>(full) / static_cast<double>(lce_params));
        }
    }

    // LCE against the strongest baseline at the last incremental step.
    os << "\nsignificance (paired t-test, one-sided)\n";
    const auto per_user = read_csv(run_dir / "per_user.csv");
    std::string last_step;
    for (const auto& row : *metrics) {
        if (row.at("step").rfind("skyline@", 0) != 0) last_step = row.at("step");
    }
    if (!per_user) {
        os << "  per_user.csv not found; skipped\n";
    } else if (kind_of.empty()) {
        os << "  model kinds unknown (model_info.csv missing); skipped\n";
    } else {
        std::string metric_n;
        std::map<std::string, double> value_at_last;
        for (const auto& row : *metrics) {
            if (row.at("step") != last_step || row.at("metric") != "recall") continue;
            if (metric_n.empty() || row.at("N") == "20") metric_n = row.at("N");
        }
        for (const auto& row : *metrics) {
            if (row.at("step") == last_step && row.at("metric") == "recall" && row.at("N") == metric_n) {
                value_at_last[row.at("model")] = std::stod(row.at("value"));
            }
        }
        std::string baseline;
        for (const auto& [model, v] : value_at_last) {
            if (kind_of[model] == "lce") continue;
            if (baseline.empty() || v > value_at_last[baseline]) baseline = model;
        }
        auto vector_of = [&](const std::string& model) {
            std::vector<double> out;
            for (const auto& row : *per_user) {
                if (row.at("model") == model && row.at("step") == last_step && row.at("metric") == "recall" &&
                    row.at("N") == metric_n) {
                    out.push_back(std::stod(row.at("value")));
                }
            }
            return out;
        };
        bool any = false;
        for (const auto& [model, v] : value_at_last) {
            if (kind_of[model] != "lce" || baseline.empty()) continue;
            any = true;
            const auto a = vector_of(model);
            const auto b = vector_of(baseline);
            try {
                const auto t = paired_t_test(a, b);
                os << fmt::format("  {} vs {} recall@{} at {}: mean diff {:.6f}, t {:.4f}, p {:.4g} (n={})\n",
                                  model, baseline, metric_n, last_step, t.mean_difference, t.t, t.p_value, t.n);
            } catch (const DegenerateVarianceError&) {
                os << fmt::format("  {} vs {}: per-user differences have zero variance; no test\n", model,
                                  baseline);
            } catch (const ConfigError& e) {
                os << fmt::format("  {} vs {}: {}\n", model, baseline, e.what());
            }
        }
        if (!any) os << "  needs one lce model and one baseline; skipped\n";
    }

    const auto text = os.str();
    auto out = open_output(run_dir / "report.txt");
    out << text;
    return text;
}

}  // namespace streamrec
