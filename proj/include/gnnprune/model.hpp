#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnnprune/graph.hpp"
#include "gnnprune/matrix.hpp"

namespace gnnprune {

enum class Combiner : std::uint8_t { concat = 0, mean = 1 };
enum class Activation : std::uint8_t { relu = 0, none = 1 };

/// One generalized GNN layer: branches k = k_min..k_max apply the k-th
/// power of the normalized adjacency before the per-branch dense
/// transform. k_min=k_max=0 is a plain dense layer.
struct LayerSpec {
    int k_min = 0;
    int k_max = 0;
    Combiner combiner = Combiner::concat;
    Activation activation = Activation::relu;
    std::uint32_t in_dim = 0;                // full layer input width
    std::vector<std::uint32_t> out_dims;     // per branch

    int num_branches() const { return k_max - k_min + 1; }
    std::uint32_t out_width() const;
    void validate() const;
};

struct Layer {
    LayerSpec spec;
    /// weights[b]: (selected input channels) x out_dims[b]
    std::vector<DenseMatrix> weights;
    /// Per-branch input channel selection; empty = all in_dim channels.
    /// Produced by folding a branch-scoped mask (batched scheme layer-1).
    std::vector<std::vector<std::uint32_t>> branch_channels;

    std::uint32_t branch_in_dim(int b) const {
        return branch_channels[b].empty() ? spec.in_dim
                                          : static_cast<std::uint32_t>(branch_channels[b].size());
    }
};

struct GnnModel {
    std::vector<Layer> layers;

    std::size_t num_layers() const { return layers.size(); }
    std::uint32_t in_dim() const { return layers.front().spec.in_dim; }
    std::uint32_t out_dim() const { return layers.back().spec.out_width(); }
    void validate() const;
    /// Content hash of the serialized model, used as the cache model id.
    std::uint64_t content_id() const;
};

/// Per-layer LASSO coefficient vector with clip state.
struct PruneMask {
    std::vector<float> beta; // length = layer in_dim; empty = identity
    bool clipped = false;
    std::uint32_t retained = 0;
    /// -1 = whole layer; otherwise the single branch k the mask applies to.
    int branch_scope = -1;

    bool identity() const { return beta.empty(); }
};

struct MaskedModel {
    GnnModel base;
    std::vector<PruneMask> masks; // one per layer
};

/// One layer of Eq-style forward: per branch apply k aggregations and the
/// dense transform, combine, then activate unless pre_activation.
DenseMatrix layer_forward(const Layer& layer, const NormalizedAdjacency& adj, const DenseMatrix& h_in,
                          bool pre_activation = false);

DenseMatrix model_forward(const GnnModel& model, const NormalizedAdjacency& adj, const DenseMatrix& attrs);

/// Evaluate a masked model without folding (channel_scale before each
/// masked layer). Reference path for the fold identity.
DenseMatrix masked_forward(const MaskedModel& mm, const NormalizedAdjacency& adj, const DenseMatrix& attrs);

/// Scale weight rows by beta, delete zero rows and the matching output
/// columns of the previous layer. The result carries no masks.
GnnModel fold_mask(const MaskedModel& mm);

void save_model(const GnnModel& model, const std::string& path);
GnnModel load_model(const std::string& path);

} // namespace gnnprune
