#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnnprune/model.hpp"

namespace gnnprune {

/// Dimensions of one aggregate/transform branch for cost purposes.
struct BranchDims {
    int k = 0;
    std::uint32_t f_in = 0;
    std::uint32_t f_out = 0;
};

struct LayerDims {
    std::vector<BranchDims> branches;
};

enum class CostMode : std::uint8_t { full = 0, batched = 1 };

struct CostReport {
    std::vector<double> macs_per_node;    // per layer
    double total_macs_per_node = 0.0;
    std::uint64_t memory_bytes = 0;
    std::vector<double> supports_per_layer; // batched support multipliers
    CostMode mode = CostMode::full;
};

/// Extract per-branch dims from a (possibly folded) model.
std::vector<LayerDims> model_dims(const GnnModel& model);

/// Per-node cost of whole-graph inference. Each k>=1 branch pays k
/// aggregations at the cheaper of its two widths (the executor orders the
/// product the same way) plus the dense product.
CostReport full_cost(const std::vector<LayerDims>& dims, std::uint64_t num_nodes, double avg_degree);

/// Per-target cost of batched inference: each layer's full cost scaled by
/// the expected support multiplier sum_l d_eff^l, with per-hop caps and a
/// cache_fraction that removes recursion below cached supports.
CostReport batched_cost(const std::vector<LayerDims>& dims, double avg_degree, std::size_t num_layers,
                        const std::vector<std::int64_t>& caps, double cache_fraction);

std::string cost_report_json(const CostReport& r);

} // namespace gnnprune
