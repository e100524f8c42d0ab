#include "gnnprune/synth.hpp"

#include <algorithm>
#include <cmath>

#include "gnnprune/rng.hpp"

namespace gnnprune {

namespace {

void adjacency_from_pairs(Graph& g, std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
    // store both directions, CSR rows sorted by neighbor id
    std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;
    arcs.reserve(pairs.size() * 2);
    for (auto [a, b] : pairs) {
        arcs.emplace_back(a, b);
        arcs.emplace_back(b, a);
    }
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
    g.indptr.assign(g.num_nodes + 1, 0);
    for (auto [a, b] : arcs) ++g.indptr[a + 1];
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) g.indptr[v + 1] += g.indptr[v];
    g.indices.resize(arcs.size());
    std::vector<std::uint64_t> cursor(g.indptr.begin(), g.indptr.end() - 1);
    for (auto [a, b] : arcs) g.indices[cursor[a]++] = b;
}

void fill_attributes(Graph& g, const std::vector<std::uint32_t>& klass, std::uint32_t blocks,
                     std::uint32_t attr_dim, double mean_scale, double sigma, std::uint64_t seed) {
    g.attributes = DenseMatrix(g.num_nodes, attr_dim);
    Rng rng = Rng::substream(seed, "synth/attrs");
    std::uint32_t block_width = std::max(1u, attr_dim / blocks);
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
        std::uint32_t lo = (klass[v] * block_width) % attr_dim;
        for (std::uint32_t j = 0; j < attr_dim; ++j) {
            double mean = (j >= lo && j < lo + block_width) ? mean_scale : 0.0;
            g.attributes(v, j) = static_cast<float>(mean + sigma * rng.normal());
        }
    }
}

void fill_labels(Graph& g, const std::vector<std::uint32_t>& klass, std::uint32_t blocks, LabelMode mode,
                 std::uint64_t seed) {
    g.num_classes = blocks;
    g.label_mode = mode;
    if (mode == LabelMode::single) {
        g.labels_single.assign(klass.begin(), klass.end());
    } else {
        Rng rng = Rng::substream(seed, "synth/labels");
        g.labels_multi.assign(g.num_nodes * blocks, 0);
        for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
            g.labels_multi[v * blocks + klass[v]] = 1;
            // occasional secondary label keeps the multi-label path honest
            if (blocks > 1 && rng.uniform() < 0.3)
                g.labels_multi[v * blocks + (klass[v] + 1) % blocks] = 1;
        }
    }
}

void fill_split(Graph& g, double train_frac, double val_frac, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, "synth/split");
    g.split.resize(g.num_nodes);
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
        double u = rng.uniform();
        g.split[v] = static_cast<std::uint8_t>(u < train_frac           ? Split::train
                                               : u < train_frac + val_frac ? Split::val
                                                                           : Split::test);
    }
}

} // namespace

Graph synth_sbm(const SbmParams& p) {
    require(p.n > 0, "synth_sbm: n must be positive");
    require(p.blocks >= 1 && p.blocks <= p.n, "synth_sbm: invalid block count");
    require(p.p_in >= 0 && p.p_in <= 1 && p.p_out >= 0 && p.p_out <= 1, "synth_sbm: probabilities outside [0,1]");
    require(p.attr_dim > 0, "synth_sbm: attr_dim must be positive");
    require(p.train_frac >= 0 && p.val_frac >= 0 && p.train_frac + p.val_frac <= 1.0,
            "synth_sbm: invalid split fractions");

    Graph g;
    g.num_nodes = p.n;
    std::vector<std::uint32_t> klass(p.n);
    for (std::uint64_t v = 0; v < p.n; ++v) klass[v] = static_cast<std::uint32_t>(v % p.blocks);

    Rng rng = Rng::substream(p.seed, "synth/edges");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::uint64_t i = 0; i < p.n; ++i)
        for (std::uint64_t j = i + 1; j < p.n; ++j) {
            double prob = klass[i] == klass[j] ? p.p_in : p.p_out;
            if (rng.uniform() < prob)
                pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        }
    adjacency_from_pairs(g, pairs);
    fill_attributes(g, klass, p.blocks, p.attr_dim, p.mean_scale, p.noise_sigma, p.seed);
    fill_labels(g, klass, p.blocks, p.label_mode, p.seed);
    fill_split(g, p.train_frac, p.val_frac, p.seed);
    g.validate();
    return g;
}

Graph synth_tree(std::uint32_t branching, std::uint32_t depth, std::uint32_t attr_dim, std::uint64_t seed) {
    require(branching >= 1, "synth_tree: branching must be positive");
    require(attr_dim > 0, "synth_tree: attr_dim must be positive");
    std::uint64_t n = 0, level = 1;
    for (std::uint32_t d = 0; d <= depth; ++d) {
        n += level;
        level *= branching;
    }
    Graph g;
    g.num_nodes = n;
    std::vector<std::uint32_t> klass(n);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    // BFS numbering: children of v are v*branching+1 .. v*branching+branching
    std::uint64_t first_leaf = (n - 1) / branching; // nodes past this have no children
    for (std::uint64_t v = 0; v < n; ++v) {
        if (v > 0) klass[v] = (klass[(v - 1) / branching] + 1) % 2;
        if (v <= first_leaf)
            for (std::uint32_t c = 1; c <= branching; ++c) {
                std::uint64_t child = v * branching + c;
                if (child < n) pairs.emplace_back(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(child));
            }
    }
    adjacency_from_pairs(g, pairs);
    fill_attributes(g, klass, 2, attr_dim, 1.0, 1.0, seed);
    fill_labels(g, klass, 2, LabelMode::single, seed);
    fill_split(g, 0.6, 0.2, seed);
    g.validate();
    return g;
}

Graph synth_power_law(std::uint64_t n, std::uint32_t attach, std::uint32_t blocks, std::uint32_t attr_dim,
                      std::uint64_t seed) {
    require(n > attach && attach >= 1, "synth_power_law: need n > attach >= 1");
    require(blocks >= 1 && attr_dim > 0, "synth_power_law: invalid blocks or attr_dim");
    Graph g;
    g.num_nodes = n;
    std::vector<std::uint32_t> klass(n);
    for (std::uint64_t v = 0; v < n; ++v) klass[v] = static_cast<std::uint32_t>(v % blocks);

    Rng rng = Rng::substream(seed, "synth/edges");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<std::uint32_t> endpoints; // degree-proportional sampling pool
    // seed star over the first attach+1 nodes
    for (std::uint32_t v = 1; v <= attach; ++v) {
        pairs.emplace_back(0u, v);
        endpoints.push_back(0);
        endpoints.push_back(v);
    }
    for (std::uint64_t v = attach + 1; v < n; ++v) {
        std::vector<std::uint32_t> picked;
        while (picked.size() < attach) {
            std::uint32_t u = endpoints[rng.below(static_cast<std::uint64_t>(endpoints.size()))];
            if (std::find(picked.begin(), picked.end(), u) == picked.end()) picked.push_back(u);
        }
        for (std::uint32_t u : picked) {
            pairs.emplace_back(u, static_cast<std::uint32_t>(v));
            endpoints.push_back(u);
            endpoints.push_back(static_cast<std::uint32_t>(v));
        }
    }
    adjacency_from_pairs(g, pairs);
    fill_attributes(g, klass, blocks, attr_dim, 1.0, 1.0, seed);
    fill_labels(g, klass, blocks, LabelMode::single, seed);
    fill_split(g, 0.6, 0.2, seed);
    g.validate();
    return g;
}

} // namespace gnnprune
