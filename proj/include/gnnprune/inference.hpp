#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gnnprune/graph.hpp"
#include "gnnprune/model.hpp"

namespace gnnprune {

/// Layer-indexed node -> hidden-vector store with version stamps. Stale
/// entries (wrong graph version or model id) are treated as misses.
/// Eviction beyond capacity is least-recently-stored.
class HiddenFeatureCache {
public:
    explicit HiddenFeatureCache(std::size_t capacity = 0, std::int64_t max_age_versions = 0)
        : capacity_(capacity), max_age_(max_age_versions) {}

    void store(std::size_t layer, std::uint32_t node, std::vector<float> vec, std::int64_t version,
               std::uint64_t model_id);
    std::optional<std::vector<float>> lookup(std::size_t layer, std::uint32_t node, std::int64_t version,
                                             std::uint64_t model_id);
    bool fresh(std::size_t layer, std::uint32_t node, std::int64_t version, std::uint64_t model_id) const;

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    std::uint64_t stores() const { return stores_; }
    std::size_t size() const { return count_; }
    void reset_stats() { hits_ = misses_ = 0; }

private:
    struct Entry {
        std::vector<float> vec;
        std::int64_t version;
        std::uint64_t model_id;
        std::uint64_t seq;
    };
    struct Key {
        std::size_t layer;
        std::uint32_t node;
        std::uint64_t seq;
    };
    std::vector<std::unordered_map<std::uint32_t, Entry>> layers_;
    std::deque<Key> store_order_;
    std::size_t capacity_;
    std::int64_t max_age_;
    std::size_t count_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t hits_ = 0, misses_ = 0, stores_ = 0;
};

struct BatchRequest {
    std::vector<std::uint32_t> targets;
    /// caps[h] bounds the fan-out at hop h+1 from the targets; -1 means
    /// unlimited; hops past the end of the list are unlimited.
    std::vector<std::int64_t> neighbor_caps = {-1, 32};
    std::uint64_t seed = 0;
    bool use_cache = false;
    bool store_roots = false;
};

/// Per-level support sets walked from the output layer toward the input.
/// needed[i] are the nodes whose layer-i features are read; computed[i]
/// excludes the ones served from cache (u_vis).
struct BatchPlan {
    std::size_t num_layers = 0;
    std::vector<std::vector<std::uint32_t>> needed;   // size L+1; needed[L] = targets
    std::vector<std::vector<std::uint32_t>> visited;  // u_vis per level (cache-served)
    std::vector<std::vector<std::uint32_t>> computed; // needed minus visited
    /// Sampled sub-adjacency per layer i (1..L), rows indexed into
    /// needed[i-1]. Nodes that were never expanded have empty rows.
    struct SubAdj {
        std::vector<std::uint64_t> indptr;
        std::vector<std::uint32_t> indices; // local row indices
        std::vector<float> values;
    };
    std::vector<SubAdj> sub_adj; // size L, sub_adj[i-1] serves layer i
    std::vector<std::unordered_map<std::uint32_t, std::uint32_t>> row_of; // per level, global -> local

    std::size_t layer1_supports() const { return needed.front().size(); }
};

struct LayerCost {
    std::uint64_t macs = 0;
};

struct InferenceStats {
    std::vector<std::uint64_t> macs_per_layer;
    std::uint64_t total_macs = 0;
    std::vector<std::size_t> computed_supports; // per level 0..L-1 (batched)
    std::vector<std::size_t> needed_supports;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    double latency_us = 0.0;
};

/// Whole-graph inference; logits for every node.
DenseMatrix full_inference(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj,
                           InferenceStats* stats = nullptr);

BatchPlan build_batch_plan(const Graph& g, const NormalizedAdjacency& adj, const GnnModel& model,
                           const BatchRequest& req, HiddenFeatureCache* cache);

/// Execute a plan on compacted submatrices; returns logits for the
/// targets in request order.
DenseMatrix batched_inference(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj,
                              const BatchRequest& req, HiddenFeatureCache* cache,
                              InferenceStats* stats = nullptr);

/// Cache warm-up: run full inference and store every train/val node's
/// hidden features at each non-final layer.
void warm_cache_train_val(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj,
                          HiddenFeatureCache& cache);

} // namespace gnnprune
