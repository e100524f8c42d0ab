#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "gnnprune/synth.hpp"

using namespace gnnprune;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("SBM generation is valid and seed-deterministic down to the file bytes") {
    SbmParams p;
    p.n = 300;
    p.blocks = 3;
    p.p_in = 0.05;
    p.p_out = 0.005;
    p.attr_dim = 6;
    p.seed = 42;
    Graph a = synth_sbm(p);
    Graph b = synth_sbm(p);
    CHECK(a.num_nodes == 300);
    CHECK(a.num_classes == 3);
    CHECK(a.indices == b.indices);
    CHECK(a.attributes == b.attributes);
    CHECK(a.split == b.split);

    std::string pa = fixtures::temp_path("sbm_a.grf"), pb = fixtures::temp_path("sbm_b.grf");
    save_graph(a, pa);
    save_graph(b, pb);
    CHECK(file_bytes(pa) == file_bytes(pb));

    p.seed = 43;
    Graph c = synth_sbm(p);
    CHECK(c.indices != a.indices); // a different seed moves the edges
}

TEST_CASE("SBM favors intra-block edges and block-aligned attribute means") {
    SbmParams p;
    p.n = 600;
    p.blocks = 2;
    p.p_in = 0.04;
    p.p_out = 0.004;
    p.attr_dim = 8;
    p.noise_sigma = 1.0;
    p.seed = 7;
    Graph g = synth_sbm(p);
    std::uint64_t intra = 0, inter = 0;
    for (std::uint64_t v = 0; v < g.num_nodes; ++v)
        for (std::uint64_t e = g.indptr[v]; e < g.indptr[v + 1]; ++e)
            (g.labels_single[v] == g.labels_single[g.indices[e]] ? intra : inter)++;
    CHECK(intra > 3 * inter);

    // class-0 nodes should average near 1 on their block's columns, near 0 elsewhere
    double on = 0, off = 0;
    std::uint64_t n0 = 0;
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
        if (g.labels_single[v] != 0) continue;
        ++n0;
        for (std::uint32_t j = 0; j < 4; ++j) on += g.attributes(v, j);
        for (std::uint32_t j = 4; j < 8; ++j) off += g.attributes(v, j);
    }
    CHECK(on / (4.0 * n0) == doctest::Approx(1.0).epsilon(0.15));
    CHECK(std::abs(off / (4.0 * n0)) < 0.15);
}

TEST_CASE("SBM split fractions approach the requested 60/20/20") {
    SbmParams p;
    p.n = 2000;
    p.attr_dim = 4;
    p.seed = 11;
    Graph g = synth_sbm(p);
    std::size_t counts[3] = {0, 0, 0};
    for (std::uint8_t s : g.split) counts[s]++;
    CHECK(std::abs(static_cast<double>(counts[0]) / p.n - 0.6) < 0.05);
    CHECK(std::abs(static_cast<double>(counts[1]) / p.n - 0.2) < 0.05);
    CHECK(std::abs(static_cast<double>(counts[2]) / p.n - 0.2) < 0.05);
}

TEST_CASE("invalid SBM parameters throw") {
    SbmParams p;
    p.n = 0;
    CHECK_THROWS_AS(synth_sbm(p), ContractViolation);
    p.n = 10;
    p.p_in = 1.5;
    CHECK_THROWS_AS(synth_sbm(p), ContractViolation);
    p.p_in = 0.1;
    p.train_frac = 0.9;
    p.val_frac = 0.3;
    CHECK_THROWS_AS(synth_sbm(p), ContractViolation);
}

TEST_CASE("a complete binary tree of depth 4 has 31 nodes with level-alternating labels") {
    Graph g = synth_tree(2, 4, 3, 1);
    CHECK(g.num_nodes == 31);
    CHECK(g.num_edges() == 60); // 30 undirected edges
    CHECK(g.labels_single[0] == 0);
    CHECK(g.labels_single[1] == 1);
    CHECK(g.labels_single[2] == 1);
    CHECK(g.labels_single[3] == 0);
    CHECK(g.labels_single[6] == 0);
    CHECK(g.labels_single[7] == 1);
    // root degree = branching; internal degree = branching + 1; leaves = 1
    CHECK(g.degree(0) == 2);
    CHECK(g.degree(1) == 3);
    CHECK(g.degree(30) == 1);
    // children of v are 2v+1, 2v+2
    CHECK(g.indices[g.indptr[1]] == 0);
    CHECK(g.indices[g.indptr[1] + 1] == 3);
    CHECK(g.indices[g.indptr[1] + 2] == 4);
}

TEST_CASE("a branching factor of one gives a path graph") {
    Graph g = synth_tree(1, 4, 2, 2);
    CHECK(g.num_nodes == 5);
    CHECK(g.num_edges() == 8);
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(2) == 2);
    CHECK(g.degree(4) == 1);
}

TEST_CASE("preferential attachment grows heavy-tailed hubs") {
    Graph g = synth_power_law(1000, 2, 2, 4, 3);
    CHECK(g.num_nodes == 1000);
    DegreeStats s = degree_stats(g);
    CHECK(s.isolated_count == 0);
    CHECK(s.avg_degree < 5.0);
    CHECK(s.max_degree > 8 * s.avg_degree); // hubs far above the mean
    Graph h = synth_power_law(1000, 2, 2, 4, 3);
    CHECK(g.indices == h.indices);
    CHECK_THROWS_AS(synth_power_law(2, 2, 2, 4, 0), ContractViolation);
}
