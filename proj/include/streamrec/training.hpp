#pragma once

#include "streamrec/graph_store.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace streamrec {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // decoupled
};

// Adam with decoupled weight decay over one flat parameter block.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t size, AdamConfig cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double m_hat = m_[i] / c1;
            const double v_hat = v_[i] / c2;
            params[i] -= cfg_.learning_rate *
                         (m_hat / (std::sqrt(v_hat) + cfg_.epsilon) + cfg_.weight_decay * params[i]);
        }
    }

private:
    AdamConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    long t_ = 0;
};

struct StopRule {
    int max_epochs = 800;
    int patience = 50;
    // Score the starting parameters as epoch 0 (used for warm starts).
    bool evaluate_initial = false;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double validation_recall = 0.0;
    double best_recall = 0.0;
};

struct TrainingTrace {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_recall = 0.0;
    bool stopped_early = false;
};

// Runs `step(epoch) -> loss` and `validate(state) -> recall` per epoch, keeps
// the state with the highest validation recall (strict improvement), stops
// after `patience` epochs without improvement, and leaves the best state in
// `state`.
template <class State, class Step, class Validate>
TrainingTrace run_with_early_stopping(State& state, const StopRule& rule, Step&& step,
                                      Validate&& validate) {
    TrainingTrace trace;
    State best = state;
    double best_recall = -std::numeric_limits<double>::infinity();
    if (rule.evaluate_initial) {
        best_recall = validate(state);
        trace.epochs.push_back({0, 0.0, best_recall, best_recall});
    }
    for (int epoch = 1; epoch <= rule.max_epochs; ++epoch) {
        const double loss = step(epoch);
        const double recall = validate(state);
        if (recall > best_recall) {
            best_recall = recall;
            best = state;
            trace.best_epoch = epoch;
        }
        trace.epochs.push_back({epoch, loss, recall, best_recall});
        if (epoch - trace.best_epoch >= rule.patience) {
            trace.stopped_early = true;
            break;
        }
    }
    trace.best_recall = best_recall;
    state = std::move(best);
    return trace;
}

struct Triple {
    std::uint32_t user = 0;
    std::uint32_t pos = 0;
    std::uint32_t neg = 0;
};

// One uniform negative per positive edge, drawn from items [0, num_items) the
// user has no edge to in `train`. Users adjacent to every item are skipped.
std::vector<Triple> sample_triples(std::span<const EdgeRecord> positives, const GraphSnapshot& train,
                                   std::mt19937_64& rng, int negatives_per_positive = 1);

}  // namespace streamrec
