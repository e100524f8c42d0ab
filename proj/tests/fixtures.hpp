#pragma once

#include <cstdio>
#include <string>

#include "gnnprune/graph.hpp"
#include "gnnprune/model.hpp"
#include "gnnprune/rng.hpp"

namespace fixtures {

/// 4-node toy graph: undirected edges 0-1, 0-2, 1-2, 2-3 (8 arcs),
/// attributes [[1,0],[0,1],[1,1],[2,0]].
inline gnnprune::Graph t4() {
    gnnprune::Graph g;
    g.num_nodes = 4;
    g.indptr = {0, 2, 4, 7, 8};
    g.indices = {1, 2, 0, 2, 0, 1, 3, 2};
    g.attributes = gnnprune::DenseMatrix(4, 2, {1, 0, 0, 1, 1, 1, 2, 0});
    g.num_classes = 2;
    g.labels_single = {0, 1, 0, 1};
    g.split = {0, 0, 0, 2};
    g.validate();
    return g;
}

inline gnnprune::DenseMatrix random_dense(std::size_t r, std::size_t c, gnnprune::Rng& rng, double scale = 1.0) {
    gnnprune::DenseMatrix m(r, c);
    for (float& v : m.data) v = static_cast<float>(scale * rng.normal());
    return m;
}

/// Random undirected graph (both arcs stored) with random attributes,
/// 2 classes, everything in the train split.
inline gnnprune::Graph random_graph(std::uint64_t n, double edge_prob, std::uint32_t attr_dim,
                                    std::uint64_t seed) {
    gnnprune::Rng rng(seed);
    std::vector<std::vector<std::uint32_t>> nbrs(n);
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = i + 1; j < n; ++j)
            if (rng.uniform() < edge_prob) {
                nbrs[i].push_back(static_cast<std::uint32_t>(j));
                nbrs[j].push_back(static_cast<std::uint32_t>(i));
            }
    gnnprune::Graph g;
    g.num_nodes = n;
    g.indptr.push_back(0);
    for (std::uint64_t v = 0; v < n; ++v) {
        for (std::uint32_t u : nbrs[v]) g.indices.push_back(u);
        g.indptr.push_back(g.indices.size());
    }
    g.attributes = random_dense(n, attr_dim, rng);
    g.num_classes = 2;
    g.labels_single.resize(n);
    for (std::uint64_t v = 0; v < n; ++v) g.labels_single[v] = static_cast<std::uint32_t>(rng.below(2));
    g.split.assign(n, 0);
    g.validate();
    return g;
}

/// Random model: SAGE layer (k=0..1, concat, relu) then a dense head.
inline gnnprune::GnnModel random_two_layer(std::uint32_t attr_dim, std::uint32_t hidden,
                                           std::uint32_t out_dim, gnnprune::Rng& rng) {
    using namespace gnnprune;
    GnnModel m;
    Layer l1;
    l1.spec = LayerSpec{0, 1, Combiner::concat, Activation::relu, attr_dim, {hidden, hidden}};
    l1.weights = {random_dense(attr_dim, hidden, rng, 0.5), random_dense(attr_dim, hidden, rng, 0.5)};
    l1.branch_channels = {{}, {}};
    Layer l2;
    l2.spec = LayerSpec{0, 0, Combiner::concat, Activation::none, 2 * hidden, {out_dim}};
    l2.weights = {random_dense(2 * hidden, out_dim, rng, 0.5)};
    l2.branch_channels = {{}};
    m.layers = {std::move(l1), std::move(l2)};
    m.validate();
    return m;
}

/// Dense reference forward pass for oracle comparisons: double-precision
/// adjacency powers applied as explicit dense products.
inline gnnprune::DenseMatrix dense_forward(const gnnprune::GnnModel& model,
                                           const gnnprune::NormalizedAdjacency& adj,
                                           const gnnprune::DenseMatrix& attrs) {
    using namespace gnnprune;
    std::size_t n = adj.num_nodes;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t v = 0; v < n; ++v)
        for (std::uint64_t e = adj.indptr[v]; e < adj.indptr[v + 1]; ++e) a[v][adj.indices[e]] += adj.values[e];

    std::vector<std::vector<double>> h(n);
    for (std::size_t v = 0; v < n; ++v)
        h[v].assign(attrs.row(v).begin(), attrs.row(v).end());

    for (const Layer& layer : model.layers) {
        int branches = layer.spec.num_branches();
        std::vector<std::vector<std::vector<double>>> parts;
        for (int b = 0; b < branches; ++b) {
            int k = layer.spec.k_min + b;
            // gather the branch's input channels
            std::vector<std::vector<double>> x(n);
            if (layer.branch_channels[b].empty()) {
                x = h;
            } else {
                for (std::size_t v = 0; v < n; ++v)
                    for (std::uint32_t c : layer.branch_channels[b]) x[v].push_back(h[v][c]);
            }
            for (int kk = 0; kk < k; ++kk) {
                std::vector<std::vector<double>> nx(n, std::vector<double>(x[0].size(), 0.0));
                for (std::size_t v = 0; v < n; ++v)
                    for (std::size_t u = 0; u < n; ++u)
                        if (a[v][u] != 0.0)
                            for (std::size_t c = 0; c < x[0].size(); ++c) nx[v][c] += a[v][u] * x[u][c];
                x = std::move(nx);
            }
            const DenseMatrix& w = layer.weights[b];
            std::vector<std::vector<double>> out(n, std::vector<double>(w.cols, 0.0));
            for (std::size_t v = 0; v < n; ++v)
                for (std::size_t j = 0; j < w.cols; ++j)
                    for (std::size_t c = 0; c < w.rows; ++c) out[v][j] += x[v][c] * w(c, j);
            parts.push_back(std::move(out));
        }
        std::vector<std::vector<double>> combined;
        if (layer.spec.combiner == Combiner::concat) {
            combined.assign(n, {});
            for (auto& p : parts)
                for (std::size_t v = 0; v < n; ++v) combined[v].insert(combined[v].end(), p[v].begin(), p[v].end());
        } else {
            combined = parts[0];
            for (std::size_t p = 1; p < parts.size(); ++p)
                for (std::size_t v = 0; v < n; ++v)
                    for (std::size_t c = 0; c < combined[v].size(); ++c) combined[v][c] += parts[p][v][c];
            for (auto& row : combined)
                for (double& v : row) v /= branches;
        }
        if (layer.spec.activation == Activation::relu)
            for (auto& row : combined)
                for (double& v : row) v = v < 0 ? 0 : v;
        h = std::move(combined);
    }
    DenseMatrix out(n, h[0].size());
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t c = 0; c < h[v].size(); ++c) out(v, c) = static_cast<float>(h[v][c]);
    return out;
}

inline std::string temp_path(const std::string& name) {
    return std::string("/tmp/gnnprune_test_") + name;
}

} // namespace fixtures
