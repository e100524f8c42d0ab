#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnnprune/graph.hpp"
#include "gnnprune/model.hpp"

namespace gnnprune {

enum class Optimizer : std::uint8_t { adam = 0, sgd = 1 };
enum class LossKind : std::uint8_t { softmax_ce = 0, sigmoid_bce = 1 };

struct TrainConfig {
    std::uint32_t epochs = 200;
    double learning_rate = 0.01;
    Optimizer optimizer = Optimizer::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::softmax_ce;
    std::uint32_t early_stop_patience = 20;

    void validate() const {
        if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
        if (learning_rate < 0) throw ConfigError("TrainConfig: learning_rate must be >= 0");
    }
};

struct EpochLog {
    std::uint32_t epoch;
    double train_loss;
    double val_f1;
    double lr;
};

struct TrainResult {
    GnnModel model;
    std::vector<EpochLog> log;
    double best_val_f1 = 0.0;
};

/// 64-bit mirror of a model, used by the optimizer and the gradient check.
struct DModel {
    std::vector<LayerSpec> specs;
    std::vector<std::vector<Mat<double>>> weights;
    std::vector<std::vector<std::vector<std::uint32_t>>> channels;
};

DModel to_dmodel(const GnnModel& m);
GnnModel to_float_model(const DModel& dm);

/// Full-batch loss over every row of the given graph; fills per-weight
/// gradients when grads is non-null (same shapes as dm.weights).
double loss_and_grad(const DModel& dm, const NormalizedAdjacency& adj, const Graph& g, LossKind loss,
                     std::vector<std::vector<Mat<double>>>* grads);

/// Train a fresh model (Glorot init from the seed) by full-batch gradient
/// descent on the induced training subgraph; returns the checkpoint with
/// the best validation F1-micro. Deterministic given the seed.
TrainResult train(const Graph& g, const std::vector<LayerSpec>& arch, const TrainConfig& cfg);

/// Fine-tune an existing (typically folded pruned) model under the same
/// loop and early-stop contract as train.
TrainResult retrain(const Graph& g, const GnnModel& model, const TrainConfig& cfg);

/// Micro-averaged F1; equals accuracy for single-label tasks.
double f1_micro(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& truth);
/// Multi-label variant over all (node, class) pairs with a 0.5 threshold
/// on sigmoid outputs (logits > 0).
double f1_micro_multi(const DenseMatrix& logits, const std::vector<std::uint8_t>& truth_bits);

/// Test/val F1 of a model on the full graph, restricted to one split.
double evaluate_f1(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj, Split split);

void write_train_log_csv(const std::vector<EpochLog>& log, const std::string& path);

} // namespace gnnprune
