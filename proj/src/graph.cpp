#include "gnnprune/graph.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace gnnprune {

void Graph::validate() const {
    if (indptr.size() != num_nodes + 1) throw ParseError("indptr length != num_nodes+1");
    if (indptr.front() != 0) throw ParseError("indptr[0] != 0");
    for (std::size_t i = 0; i + 1 < indptr.size(); ++i)
        if (indptr[i] > indptr[i + 1]) throw ParseError("indptr not non-decreasing at row " + std::to_string(i));
    if (indptr.back() != indices.size()) throw ParseError("indptr[num_nodes] != num_edges");
    for (std::size_t e = 0; e < indices.size(); ++e)
        if (indices[e] >= num_nodes)
            throw ParseError("index out of range: edge " + std::to_string(e) + " targets node " +
                             std::to_string(indices[e]) + " in a " + std::to_string(num_nodes) + "-node graph");
    if (attributes.rows != num_nodes) throw ParseError("attributes row count != num_nodes");
    if (split.size() != num_nodes) throw ParseError("split length != num_nodes");
    for (std::size_t v = 0; v < split.size(); ++v)
        if (split[v] > 2) throw ParseError("invalid split tag at node " + std::to_string(v));
    if (label_mode == LabelMode::single) {
        if (labels_single.size() != num_nodes) throw ParseError("labels length != num_nodes");
        for (std::size_t v = 0; v < labels_single.size(); ++v)
            if (labels_single[v] >= num_classes && num_classes > 0)
                throw ParseError("label out of range at node " + std::to_string(v));
    } else {
        if (labels_multi.size() != num_nodes * num_classes) throw ParseError("multi-label block size mismatch");
    }
}

namespace {

template <typename T>
void read_block(std::ifstream& in, T* dst, std::size_t count, const char* field) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(T)));
    if (!in)
        throw ParseError(std::string("truncated file while reading ") + field + " at byte offset " +
                         std::to_string(static_cast<long long>(in.gcount())));
}

template <typename T>
void write_block(std::ofstream& out, const T* src, std::size_t count) {
    out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(count * sizeof(T)));
}

Graph load_grf1(std::ifstream& in) {
    char magic[4];
    read_block(in, magic, 4, "magic");
    if (std::memcmp(magic, "GRF1", 4) != 0) throw ParseError("malformed header: bad magic, expected GRF1");
    Graph g;
    std::uint64_t num_edges = 0;
    std::uint32_t attr_dim = 0, label_mode = 0;
    read_block(in, &g.num_nodes, 1, "num_nodes");
    read_block(in, &num_edges, 1, "num_edges");
    read_block(in, &attr_dim, 1, "attr_dim");
    read_block(in, &label_mode, 1, "label_mode");
    read_block(in, &g.num_classes, 1, "num_classes");
    if (label_mode > 1) throw ParseError("malformed header: label_mode must be 0 or 1");
    g.label_mode = static_cast<LabelMode>(label_mode);
    g.indptr.resize(g.num_nodes + 1);
    read_block(in, g.indptr.data(), g.indptr.size(), "indptr");
    g.indices.resize(num_edges);
    read_block(in, g.indices.data(), g.indices.size(), "indices");
    g.attributes = DenseMatrix(g.num_nodes, attr_dim);
    read_block(in, g.attributes.data.data(), g.attributes.data.size(), "attributes");
    if (g.label_mode == LabelMode::single) {
        g.labels_single.resize(g.num_nodes);
        read_block(in, g.labels_single.data(), g.labels_single.size(), "labels");
    } else {
        // bitset rows padded to whole bytes
        std::size_t row_bytes = (g.num_classes + 7) / 8;
        std::vector<std::uint8_t> packed(g.num_nodes * row_bytes);
        read_block(in, packed.data(), packed.size(), "labels");
        g.labels_multi.assign(g.num_nodes * g.num_classes, 0);
        for (std::uint64_t v = 0; v < g.num_nodes; ++v)
            for (std::uint32_t c = 0; c < g.num_classes; ++c)
                g.labels_multi[v * g.num_classes + c] = (packed[v * row_bytes + c / 8] >> (c % 8)) & 1u;
    }
    g.split.resize(g.num_nodes);
    read_block(in, g.split.data(), g.split.size(), "split");
    return g;
}

Graph load_json(const std::string& path) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed JSON graph: ") + e.what());
    }
    Graph g;
    try {
        g.num_nodes = j.at("num_nodes").get<std::uint64_t>();
        g.indptr = j.at("indptr").get<std::vector<std::uint64_t>>();
        g.indices = j.at("indices").get<std::vector<std::uint32_t>>();
        std::uint32_t attr_dim = j.at("attr_dim").get<std::uint32_t>();
        g.attributes = DenseMatrix(g.num_nodes, attr_dim);
        const auto& rows = j.at("attributes");
        if (rows.size() != g.num_nodes) throw ParseError("attributes row count != num_nodes");
        for (std::size_t v = 0; v < rows.size(); ++v) {
            if (rows[v].size() != attr_dim) throw ParseError("attribute row " + std::to_string(v) + " has wrong width");
            for (std::size_t c = 0; c < attr_dim; ++c) g.attributes(v, c) = rows[v][c].get<float>();
        }
        g.label_mode = static_cast<LabelMode>(j.value("label_mode", 0u));
        g.num_classes = j.value("num_classes", 0u);
        if (g.label_mode == LabelMode::single) {
            g.labels_single = j.value("labels", std::vector<std::uint32_t>(g.num_nodes, 0));
        } else {
            g.labels_multi.reserve(g.num_nodes * g.num_classes);
            for (const auto& row : j.at("labels"))
                for (const auto& bit : row) g.labels_multi.push_back(bit.get<std::uint8_t>());
        }
        if (j.contains("split"))
            g.split = j.at("split").get<std::vector<std::uint8_t>>();
        else
            g.split.assign(g.num_nodes, 0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed JSON graph field: ") + e.what());
    }
    return g;
}

bool looks_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    return in && std::memcmp(magic, "GRF1", 4) == 0;
}

} // namespace

Graph load_graph(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ParseError("cannot open graph file: " + path);
    probe.close();

    Graph g;
    if (looks_binary(path)) {
        std::ifstream in(path, std::ios::binary);
        g = load_grf1(in);
    } else {
        g = load_json(path);
    }
    g.version = 0;
    g.validate();
    return g;
}

void save_graph(const Graph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open graph file for writing: " + path);
    out.write("GRF1", 4);
    std::uint64_t num_edges = g.num_edges();
    std::uint32_t attr_dim = g.attr_dim();
    std::uint32_t label_mode = static_cast<std::uint32_t>(g.label_mode);
    write_block(out, &g.num_nodes, 1);
    write_block(out, &num_edges, 1);
    write_block(out, &attr_dim, 1);
    write_block(out, &label_mode, 1);
    write_block(out, &g.num_classes, 1);
    write_block(out, g.indptr.data(), g.indptr.size());
    write_block(out, g.indices.data(), g.indices.size());
    write_block(out, g.attributes.data.data(), g.attributes.data.size());
    if (g.label_mode == LabelMode::single) {
        write_block(out, g.labels_single.data(), g.labels_single.size());
    } else {
        std::size_t row_bytes = (g.num_classes + 7) / 8;
        std::vector<std::uint8_t> packed(g.num_nodes * row_bytes, 0);
        for (std::uint64_t v = 0; v < g.num_nodes; ++v)
            for (std::uint32_t c = 0; c < g.num_classes; ++c)
                if (g.labels_multi[v * g.num_classes + c])
                    packed[v * row_bytes + c / 8] |= static_cast<std::uint8_t>(1u << (c % 8));
        write_block(out, packed.data(), packed.size());
    }
    write_block(out, g.split.data(), g.split.size());
    if (!out) throw ParseError("write failed: " + path);
}

NormalizedAdjacency normalize(const Graph& g, NormScheme scheme) {
    NormalizedAdjacency adj;
    adj.num_nodes = g.num_nodes;
    adj.indptr = g.indptr;
    adj.indices = g.indices;
    adj.values.resize(g.indices.size());
    adj.scheme = scheme;
    adj.source_version = g.version;
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
        std::uint64_t deg = g.degree(v);
        for (std::uint64_t e = g.indptr[v]; e < g.indptr[v + 1]; ++e) {
            if (scheme == NormScheme::row_mean) {
                adj.values[e] = 1.0f / static_cast<float>(deg);
            } else {
                std::uint64_t deg_u = g.degree(g.indices[e]);
                adj.values[e] = deg_u == 0 ? 0.0f
                                           : static_cast<float>(1.0 / std::sqrt(static_cast<double>(deg) *
                                                                                static_cast<double>(deg_u)));
            }
        }
    }
    return adj;
}

namespace {

template <typename T>
Mat<T> spmm_impl(const NormalizedAdjacency& adj, const Mat<T>& h) {
    require(h.rows == adj.num_nodes, "spmm: h row count != num_nodes");
    Mat<T> out(adj.num_nodes, h.cols);
    MacCounter::add(static_cast<std::uint64_t>(adj.indices.size()) * h.cols);
    parallel_for(adj.num_nodes, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t v = lo; v < hi; ++v) {
            T* dst = out.data.data() + v * out.cols;
            for (std::uint64_t e = adj.indptr[v]; e < adj.indptr[v + 1]; ++e) {
                T w = static_cast<T>(adj.values[e]);
                const T* src = h.data.data() + static_cast<std::size_t>(adj.indices[e]) * h.cols;
                for (std::size_t c = 0; c < h.cols; ++c) dst[c] += w * src[c];
            }
        }
    });
    return out;
}

} // namespace

DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& h) { return spmm_impl(adj, h); }
Mat<double> spmm(const NormalizedAdjacency& adj, const Mat<double>& h) { return spmm_impl(adj, h); }

NormalizedAdjacency transpose(const NormalizedAdjacency& adj) {
    NormalizedAdjacency t;
    t.num_nodes = adj.num_nodes;
    t.scheme = adj.scheme;
    t.source_version = adj.source_version;
    t.indptr.assign(adj.num_nodes + 1, 0);
    for (std::uint32_t u : adj.indices) t.indptr[u + 1]++;
    for (std::size_t v = 0; v < adj.num_nodes; ++v) t.indptr[v + 1] += t.indptr[v];
    t.indices.resize(adj.indices.size());
    t.values.resize(adj.values.size());
    std::vector<std::uint64_t> cursor(t.indptr.begin(), t.indptr.end() - 1);
    for (std::uint64_t v = 0; v < adj.num_nodes; ++v)
        for (std::uint64_t e = adj.indptr[v]; e < adj.indptr[v + 1]; ++e) {
            std::uint64_t slot = cursor[adj.indices[e]]++;
            t.indices[slot] = static_cast<std::uint32_t>(v);
            t.values[slot] = adj.values[e];
        }
    return t;
}

TrainingGraph training_graph(const Graph& g) {
    TrainingGraph tg;
    std::vector<std::uint32_t> remap(g.num_nodes, UINT32_MAX);
    for (std::uint64_t v = 0; v < g.num_nodes; ++v)
        if (g.split[v] == static_cast<std::uint8_t>(Split::train)) {
            remap[v] = static_cast<std::uint32_t>(tg.orig_ids.size());
            tg.orig_ids.push_back(static_cast<std::uint32_t>(v));
        }
    require(!tg.orig_ids.empty(), "training_graph: empty train split");

    Graph& out = tg.graph;
    out.num_nodes = tg.orig_ids.size();
    out.indptr.reserve(out.num_nodes + 1);
    out.indptr.push_back(0);
    for (std::uint32_t orig : tg.orig_ids) {
        for (std::uint64_t e = g.indptr[orig]; e < g.indptr[orig + 1]; ++e)
            if (remap[g.indices[e]] != UINT32_MAX) out.indices.push_back(remap[g.indices[e]]);
        out.indptr.push_back(out.indices.size());
    }
    out.attributes = DenseMatrix(out.num_nodes, g.attr_dim());
    out.label_mode = g.label_mode;
    out.num_classes = g.num_classes;
    out.split.assign(out.num_nodes, static_cast<std::uint8_t>(Split::train));
    if (g.label_mode == LabelMode::single) out.labels_single.resize(out.num_nodes);
    else out.labels_multi.resize(out.num_nodes * g.num_classes);
    for (std::uint64_t v = 0; v < out.num_nodes; ++v) {
        std::uint32_t orig = tg.orig_ids[v];
        std::copy_n(g.attributes.row(orig).data(), g.attr_dim(), out.attributes.row(v).data());
        if (g.label_mode == LabelMode::single) {
            out.labels_single[v] = g.labels_single[orig];
        } else {
            std::copy_n(g.labels_multi.data() + static_cast<std::size_t>(orig) * g.num_classes, g.num_classes,
                        out.labels_multi.data() + v * g.num_classes);
        }
    }
    out.version = 0;
    return tg;
}

DegreeStats degree_stats(const Graph& g) {
    require(g.num_nodes > 0, "degree_stats: empty graph");
    DegreeStats s;
    s.avg_degree = static_cast<double>(g.num_edges()) / static_cast<double>(g.num_nodes);
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
        std::uint64_t deg = g.degree(v);
        s.max_degree = std::max(s.max_degree, deg);
        if (deg == 0) s.isolated_count++;
    }
    return s;
}

} // namespace gnnprune
