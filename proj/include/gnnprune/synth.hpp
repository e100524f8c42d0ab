#pragma once

#include <cstdint>

#include "gnnprune/graph.hpp"

namespace gnnprune {

/// Stochastic block model with class-correlated attributes: every node's
/// attribute vector is its class's coordinate-block mean plus Gaussian
/// noise, so aggregation over (mostly same-class) neighbors denoises.
struct SbmParams {
    std::uint64_t n = 0;
    std::uint32_t blocks = 2;
    double p_in = 0.02;
    double p_out = 0.002;
    std::uint32_t attr_dim = 16;
    double noise_sigma = 1.0;
    double mean_scale = 1.0;
    double train_frac = 0.6;
    double val_frac = 0.2;
    LabelMode label_mode = LabelMode::single;
    std::uint64_t seed = 0;
};

Graph synth_sbm(const SbmParams& p);

/// Complete rooted tree: branching^0 + ... + branching^depth nodes, labels
/// alternate by level.
Graph synth_tree(std::uint32_t branching, std::uint32_t depth, std::uint32_t attr_dim, std::uint64_t seed);

/// Preferential-attachment graph (new nodes attach to `attach` endpoints
/// drawn proportional to degree); labels and attributes as in the SBM.
Graph synth_power_law(std::uint64_t n, std::uint32_t attach, std::uint32_t blocks, std::uint32_t attr_dim,
                      std::uint64_t seed);

} // namespace gnnprune
