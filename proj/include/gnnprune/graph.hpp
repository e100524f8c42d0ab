#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnnprune/matrix.hpp"

namespace gnnprune {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

enum class LabelMode : std::uint32_t { single = 0, multi = 1 };

/// CSR graph with node attributes, labels and a train/val/test split.
/// Undirected graphs store both arc directions; row v lists the
/// in-neighborhood used by aggregation.
struct Graph {
    std::uint64_t num_nodes = 0;
    std::vector<std::uint64_t> indptr;  // length num_nodes+1
    std::vector<std::uint32_t> indices; // length num_edges
    DenseMatrix attributes;             // num_nodes x attr_dim
    LabelMode label_mode = LabelMode::single;
    std::uint32_t num_classes = 0;
    std::vector<std::uint32_t> labels_single; // per node class id
    std::vector<std::uint8_t> labels_multi;   // num_nodes x num_classes, 0/1
    std::vector<std::uint8_t> split;          // Split values
    std::int64_t version = 0;

    std::uint64_t num_edges() const { return indices.size(); }
    std::uint32_t attr_dim() const { return static_cast<std::uint32_t>(attributes.cols); }
    std::uint64_t degree(std::uint64_t v) const { return indptr[v + 1] - indptr[v]; }

    /// Throws ParseError if any structural invariant is broken.
    void validate() const;
};

enum class NormScheme : std::uint8_t { row_mean = 0, sym = 1 };

/// Row-normalized sparse operator. Edge weights are stored explicitly so
/// evolving-graph versions can invalidate caches by version stamp alone.
struct NormalizedAdjacency {
    std::uint64_t num_nodes = 0;
    std::vector<std::uint64_t> indptr;
    std::vector<std::uint32_t> indices;
    std::vector<float> values;
    NormScheme scheme = NormScheme::row_mean;
    std::int64_t source_version = 0;
};

struct DegreeStats {
    double avg_degree = 0.0;
    std::uint64_t max_degree = 0;
    std::uint64_t isolated_count = 0;
};

/// Induced training subgraph plus the mapping back to original node ids.
struct TrainingGraph {
    Graph graph;
    std::vector<std::uint32_t> orig_ids; // new id -> original id
};

Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);

NormalizedAdjacency normalize(const Graph& g, NormScheme scheme);

/// out[v] = sum over neighbors u of value(v,u) * h[u], accumulated in CSR
/// index order. Powers of the operator are realized by successive calls.
DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& h);
Mat<double> spmm(const NormalizedAdjacency& adj, const Mat<double>& h);

/// Transposed operator, needed by backprop through aggregation.
NormalizedAdjacency transpose(const NormalizedAdjacency& adj);

TrainingGraph training_graph(const Graph& g);

DegreeStats degree_stats(const Graph& g);

} // namespace gnnprune
