#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gnnprune/graph.hpp"
#include "gnnprune/model.hpp"

namespace gnnprune {

struct PruneBudget {
    double eta = 1.0;
    /// -1 = whole layer; otherwise the branch k the budget applies to.
    int branch_scope = -1;

    void validate() const {
        if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("PruneBudget: eta must be in (0,1]");
    }
    std::uint32_t retained_count(std::uint32_t channels) const {
        std::uint32_t r = static_cast<std::uint32_t>(std::ceil(eta * channels));
        return std::max(1u, std::min(r, channels));
    }
};

struct PenaltySchedule {
    double lambda0 = -1.0; // <0: scale-free default, 1e-4 * data_loss / ||1||_1
    double growth = 1.2;
    std::uint32_t max_epochs = 200;
    std::uint32_t over_penalty_window = 3;
    double lr = 1e-2;

    void validate() const {
        if (growth <= 1.0) throw ConfigError("PenaltySchedule: growth must be > 1");
    }
};

enum class StopReason : std::uint8_t { budget = 0, over_penalized = 1, max_epochs = 2 };

/// Per-branch observations A^k h and targets Y for one layer's LASSO
/// channel selection. Rows are training nodes.
struct PruneProblem {
    std::vector<DenseMatrix> observations; // per branch, rows x c
    std::vector<DenseMatrix> targets;      // per branch, rows x f_out
    std::vector<DenseMatrix> weights;      // current W-hat per branch
    Combiner combiner = Combiner::concat;
    std::uint32_t batch_size = 1024;
    std::uint64_t seed = 0;

    std::uint32_t channels() const { return static_cast<std::uint32_t>(observations.front().cols); }
    std::uint64_t rows() const { return observations.front().rows; }
    void validate() const;
};

struct BetaPhaseResult {
    std::vector<float> beta;
    StopReason stop_reason = StopReason::max_epochs;
    std::uint32_t epochs_run = 0;
    double final_lambda = 0.0;
};

struct LayerPruneReport {
    std::uint32_t layer_idx = 0;
    std::uint32_t channels = 0;
    std::uint32_t retained = 0;
    double eta = 1.0;
    double final_lambda = 0.0;
    std::uint32_t epochs_run = 0;
    StopReason stop_reason = StopReason::budget;
    double reconstruction_mse_before = 0.0; // clipped mask, pre-refit weights
    double reconstruction_mse_after = 0.0;  // clipped mask, refit weights
};

enum class PruneScheme : std::uint8_t { full = 0, batched = 1 };
enum class RefitMode : std::uint8_t { closed_form = 0, sgd = 1 };
enum class BaselineMethod : std::uint8_t { random = 0, max_residual = 1 };

struct PruneResult {
    MaskedModel model;
    std::vector<LayerPruneReport> reports;
};

/// Adam state for the beta optimizer, persisted across epochs of a phase.
struct BetaAdamState {
    std::vector<double> m, v;
    std::uint64_t t = 0;
};

/// Materialize the LASSO problem for one layer: run the (as yet unpruned)
/// shallower layers forward on the training graph, collect A^k h per
/// branch, and build targets from the layer's original weights restricted
/// to the output columns that survive downstream pruning.
PruneProblem collect_problem(const GnnModel& model, std::size_t layer_idx, const Graph& g_train,
                             const std::vector<PruneMask>& downstream_masks, std::uint32_t batch_size = 1024,
                             std::uint64_t seed = 0);

/// One epoch of minibatch Adam on the shared-mask objective
/// sum_k ||Y_k - (A^k h (.) beta) W_k||^2 + lambda ||beta||_1.
/// Returns the epoch-end total loss.
double beta_epoch(const PruneProblem& p, std::vector<float>& beta, double lambda, double lr,
                  BetaAdamState& state);

/// Repeat beta epochs, growing lambda each epoch, until the budget is met,
/// every entry is shrinking (over-penalized), or max_epochs.
BetaPhaseResult run_beta_phase(const PruneProblem& p, const PruneBudget& budget, const PenaltySchedule& sched);

/// Keep the ceil(eta*c) largest-|beta| entries at their values, zero the
/// rest. Ties retain the lower index.
PruneMask clip_mask(const std::vector<float>& beta, const PruneBudget& budget);

/// Least-squares refit of the per-branch weights on the masked
/// observations. closed_form solves the normal equations (ridge jitter
/// 1e-8 when singular); sgd runs minibatch Adam until the relative loss
/// change drops below 1e-5.
std::vector<DenseMatrix> refit_weights(const PruneProblem& p, const PruneMask& mask, RefitMode mode);

/// collect -> beta phase -> clip -> refit, one pass per sub-problem.
/// Installs the refit weights and mask into the model.
LayerPruneReport prune_layer(MaskedModel& model, std::size_t layer_idx, const PruneBudget& budget,
                             const PenaltySchedule& sched, const Graph& g_train, RefitMode refit = RefitMode::closed_form,
                             std::uint32_t batch_size = 1024, std::uint64_t seed = 0);

/// Whole-model pruning, output layer first. full: budget eta everywhere
/// except the raw-attribute input channels. batched: eta on the whole
/// second layer and on the k=1 branch of the first layer only.
PruneResult prune_model(const GnnModel& model, const Graph& g_train, PruneScheme scheme, double eta,
                        const PenaltySchedule& sched, RefitMode refit = RefitMode::closed_form,
                        std::uint32_t batch_size = 1024, std::uint64_t seed = 0);

/// Comparison baselines: seeded random retention, or retaining the
/// channels whose weight rows have the largest L1 norm summed across
/// branches ("Max Res.").
PruneMask baseline_mask(const PruneProblem& p, const PruneBudget& budget, BaselineMethod method,
                        std::uint64_t seed = 0);

/// Reconstruction MSE of a clipped mask with refit weights, for
/// baseline-vs-LASSO comparisons.
double reconstruction_mse(const PruneProblem& p, const PruneMask& mask, const std::vector<DenseMatrix>& weights);

std::string to_string(StopReason r);

} // namespace gnnprune
