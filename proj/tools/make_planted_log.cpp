// Writes a planted block-structured temporal edge log as TSV, plus a matching
// experiment config when --config is given.
#include "streamrec/experiment.hpp"
#include "streamrec/synthetic.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a planted block graph edge log"};
    streamrec::PlantedConfig pc;
    std::string out_path = "planted.tsv";
    std::string config_path;
    app.add_option("--out", out_path, "TSV output path");
    app.add_option("--config", config_path, "also write an experiment config here");
    app.add_option("--users", pc.num_users);
    app.add_option("--items", pc.num_items);
    app.add_option("--blocks", pc.num_blocks);
    app.add_option("--per-user", pc.interactions_per_user);
    app.add_option("--zipf", pc.zipf_exponent);
    app.add_option("--chunks", pc.num_chunks);
    app.add_option("--seed", pc.seed);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto g = streamrec::make_planted_graph(pc);
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        streamrec::write_edge_log(g.log, out);

        if (!config_path.empty()) {
            streamrec::ExperimentConfig cfg;
            cfg.data_path = out_path;
            cfg.schedule = {"seconds", g.windows.offline, g.windows.streaming, g.windows.test,
                            g.windows.num_chunks, g.windows.validation_fraction};
            // library defaults target full-size logs; these suit a few thousand edges
            const nlohmann::json lce_params{
                {"dim", 32}, {"composition", "sum"}, {"learning_rate", 1e-2}, {"batch_size", 64}};
            cfg.models = {{"lce", streamrec::ModelKind::Lce, lce_params, nlohmann::json::object()},
                          {"pop", streamrec::ModelKind::Pop, nlohmann::json::object(), nlohmann::json::object()}};
            cfg.seed = pc.seed;
            std::ofstream cout_(config_path);
            if (!cout_) throw std::runtime_error("cannot write " + config_path);
            cout_ << streamrec::to_json(cfg).dump(2) << '\n';
        }
        std::cerr << g.log.edges.size() << " edges, " << g.log.num_users << " users, " << g.log.num_items
                  << " items\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
