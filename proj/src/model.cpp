#include "gnnprune/model.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gnnprune {

std::uint32_t LayerSpec::out_width() const {
    if (combiner == Combiner::mean) return out_dims.front();
    return std::accumulate(out_dims.begin(), out_dims.end(), 0u);
}

void LayerSpec::validate() const {
    require(k_min >= 0 && k_max >= k_min, "LayerSpec: invalid branch range");
    require(out_dims.size() == static_cast<std::size_t>(num_branches()), "LayerSpec: out_dims size != branches");
    if (combiner == Combiner::mean)
        for (std::uint32_t d : out_dims)
            require(d == out_dims.front(), "LayerSpec: mean combiner requires equal out_dims");
}

void GnnModel::validate() const {
    require(!layers.empty(), "GnnModel: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        l.spec.validate();
        require(l.weights.size() == static_cast<std::size_t>(l.spec.num_branches()), "GnnModel: weights/branches mismatch");
        require(l.branch_channels.size() == l.weights.size(), "GnnModel: branch_channels size mismatch");
        for (int b = 0; b < l.spec.num_branches(); ++b) {
            require(l.weights[b].rows == l.branch_in_dim(b), "GnnModel: weight row count mismatch");
            require(l.weights[b].cols == l.spec.out_dims[b], "GnnModel: weight col count mismatch");
            for (std::uint32_t ch : l.branch_channels[b])
                require(ch < l.spec.in_dim, "GnnModel: branch channel out of range");
        }
        if (i > 0)
            require(l.spec.in_dim == layers[i - 1].spec.out_width(), "GnnModel: layer width chain mismatch");
    }
}

namespace {

DenseMatrix gather_columns(const DenseMatrix& h, const std::vector<std::uint32_t>& cols) {
    if (cols.empty()) return h;
    DenseMatrix out(h.rows, cols.size());
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = h(i, cols[j]);
    return out;
}

/// Branch compute with the cheaper ordering: transform first when the
/// output side is narrower, so aggregation runs at min(f_in, f_out) width.
DenseMatrix branch_forward(const DenseMatrix& x, const DenseMatrix& w, int k, const NormalizedAdjacency& adj) {
    if (k == 0) return matmul(x, w);
    if (w.cols < x.cols) {
        DenseMatrix t = matmul(x, w);
        for (int i = 0; i < k; ++i) t = spmm(adj, t);
        return t;
    }
    DenseMatrix a = x;
    for (int i = 0; i < k; ++i) a = spmm(adj, a);
    return matmul(a, w);
}

DenseMatrix layer_forward_masked(const Layer& layer, const NormalizedAdjacency& adj, const DenseMatrix& h_in,
                                 bool pre_activation, const PruneMask* mask) {
    require(h_in.cols == layer.spec.in_dim, "layer_forward: input width mismatch");
    if (layer.spec.k_max > 0)
        require(adj.num_nodes == h_in.rows, "layer_forward: adjacency does not cover input rows");

    DenseMatrix h_whole = h_in;
    if (mask && !mask->identity() && mask->branch_scope < 0)
        h_whole = channel_scale(h_in, std::span<const float>(mask->beta));

    std::vector<DenseMatrix> parts;
    parts.reserve(layer.spec.num_branches());
    for (int b = 0; b < layer.spec.num_branches(); ++b) {
        int k = layer.spec.k_min + b;
        const DenseMatrix* src = &h_whole;
        DenseMatrix h_branch;
        if (mask && !mask->identity() && mask->branch_scope == k) {
            h_branch = channel_scale(h_in, std::span<const float>(mask->beta));
            src = &h_branch;
        }
        DenseMatrix x = gather_columns(*src, layer.branch_channels[b]);
        parts.push_back(branch_forward(x, layer.weights[b], k, adj));
    }

    DenseMatrix out;
    if (layer.spec.combiner == Combiner::concat) {
        out = hconcat(parts);
    } else {
        out = parts.front();
        float inv = 1.0f / static_cast<float>(parts.size());
        for (std::size_t p = 1; p < parts.size(); ++p)
            for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += parts[p].data[i];
        for (float& v : out.data) v *= inv;
    }
    if (!pre_activation && layer.spec.activation == Activation::relu) out = relu(out);
    return out;
}

} // namespace

DenseMatrix layer_forward(const Layer& layer, const NormalizedAdjacency& adj, const DenseMatrix& h_in,
                          bool pre_activation) {
    return layer_forward_masked(layer, adj, h_in, pre_activation, nullptr);
}

DenseMatrix model_forward(const GnnModel& model, const NormalizedAdjacency& adj, const DenseMatrix& attrs) {
    require(!model.layers.empty(), "model_forward: empty model");
    DenseMatrix h = attrs;
    for (const Layer& layer : model.layers) h = layer_forward(layer, adj, h);
    return h;
}

DenseMatrix masked_forward(const MaskedModel& mm, const NormalizedAdjacency& adj, const DenseMatrix& attrs) {
    require(mm.masks.size() == mm.base.layers.size(), "masked_forward: mask count mismatch");
    DenseMatrix h = attrs;
    for (std::size_t i = 0; i < mm.base.layers.size(); ++i)
        h = layer_forward_masked(mm.base.layers[i], adj, h, false, &mm.masks[i]);
    return h;
}

namespace {

std::vector<std::uint32_t> retained_indices(const PruneMask& m) {
    std::vector<std::uint32_t> kept;
    for (std::size_t j = 0; j < m.beta.size(); ++j)
        if (m.beta[j] != 0.0f) kept.push_back(static_cast<std::uint32_t>(j));
    return kept;
}

/// Scale weight rows by beta and keep only the retained rows.
DenseMatrix fold_rows(const DenseMatrix& w, const std::vector<float>& beta,
                      const std::vector<std::uint32_t>& kept) {
    DenseMatrix out(kept.size(), w.cols);
    for (std::size_t r = 0; r < kept.size(); ++r)
        for (std::size_t c = 0; c < w.cols; ++c) out(r, c) = beta[kept[r]] * w(kept[r], c);
    return out;
}

DenseMatrix drop_columns(const DenseMatrix& w, const std::vector<std::uint32_t>& kept) {
    DenseMatrix out(w.rows, kept.size());
    for (std::size_t r = 0; r < w.rows; ++r)
        for (std::size_t c = 0; c < kept.size(); ++c) out(r, c) = w(r, kept[c]);
    return out;
}

} // namespace

GnnModel fold_mask(const MaskedModel& mm) {
    require(mm.masks.size() == mm.base.layers.size(), "fold_mask: mask count mismatch");
    GnnModel out = mm.base;

    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        const PruneMask& m = mm.masks[i];
        if (m.identity()) continue;
        require(m.clipped, "fold_mask: mask for layer " + std::to_string(i) + " is not clipped");
        Layer& layer = out.layers[i];
        require(m.beta.size() == layer.spec.in_dim, "fold_mask: mask length != layer in_dim");

        std::vector<std::uint32_t> kept = retained_indices(m);
        require(!kept.empty(), "fold_mask: mask zeroes every channel of layer " + std::to_string(i));

        if (m.branch_scope >= 0) {
            int b = m.branch_scope - layer.spec.k_min;
            require(b >= 0 && b < layer.spec.num_branches(), "fold_mask: branch scope out of range");
            require(layer.branch_channels[b].empty(), "fold_mask: branch already folded");
            layer.weights[b] = fold_rows(layer.weights[b], m.beta, kept);
            layer.branch_channels[b] = kept;
            continue;
        }

        for (int b = 0; b < layer.spec.num_branches(); ++b) {
            require(layer.branch_channels[b].empty(), "fold_mask: layer already folded");
            layer.weights[b] = fold_rows(layer.weights[b], m.beta, kept);
        }

        if (i == 0) {
            // Raw attributes cannot be deleted from the graph; gather instead.
            for (int b = 0; b < out.layers[0].spec.num_branches(); ++b) out.layers[0].branch_channels[b] = kept;
            continue;
        }
        layer.spec.in_dim = static_cast<std::uint32_t>(kept.size());

        // Remove the matching output columns of the previous layer.
        Layer& prev = out.layers[i - 1];
        if (prev.spec.combiner == Combiner::mean) {
            for (int b = 0; b < prev.spec.num_branches(); ++b) {
                prev.weights[b] = drop_columns(prev.weights[b], kept);
                prev.spec.out_dims[b] = static_cast<std::uint32_t>(kept.size());
            }
        } else {
            std::size_t off = 0;
            std::size_t kpos = 0;
            for (int b = 0; b < prev.spec.num_branches(); ++b) {
                std::vector<std::uint32_t> local;
                while (kpos < kept.size() && kept[kpos] < off + prev.spec.out_dims[b]) {
                    local.push_back(kept[kpos] - static_cast<std::uint32_t>(off));
                    ++kpos;
                }
                off += prev.spec.out_dims[b];
                prev.weights[b] = drop_columns(prev.weights[b], local);
                prev.spec.out_dims[b] = static_cast<std::uint32_t>(local.size());
            }
        }
    }
    out.validate();
    return out;
}

namespace {

void write_model(const GnnModel& model, std::ostream& out) {
    out.write("GNM1", 4);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u8 = [&](std::uint8_t v) { out.write(reinterpret_cast<const char*>(&v), 1); };
    put_u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const Layer& l : model.layers) {
        put_u32(static_cast<std::uint32_t>(l.spec.k_min));
        put_u32(static_cast<std::uint32_t>(l.spec.k_max));
        put_u8(static_cast<std::uint8_t>(l.spec.combiner));
        put_u8(static_cast<std::uint8_t>(l.spec.activation));
        put_u32(l.spec.in_dim);
        for (std::uint32_t d : l.spec.out_dims) put_u32(d);
        // per-branch channel selection (0 = all channels)
        for (const auto& sel : l.branch_channels) {
            put_u32(static_cast<std::uint32_t>(sel.size()));
            for (std::uint32_t ch : sel) put_u32(ch);
        }
        for (const DenseMatrix& w : l.weights)
            out.write(reinterpret_cast<const char*>(w.data.data()),
                      static_cast<std::streamsize>(w.data.size() * sizeof(float)));
    }
}

GnnModel read_model(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GNM1", 4) != 0) throw ParseError("model file: bad magic, expected GNM1");
    auto get_u32 = [&]() {
        std::uint32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw ParseError("model file truncated");
        return v;
    };
    auto get_u8 = [&]() {
        std::uint8_t v;
        in.read(reinterpret_cast<char*>(&v), 1);
        if (!in) throw ParseError("model file truncated");
        return v;
    };
    GnnModel model;
    std::uint32_t num_layers = get_u32();
    model.layers.resize(num_layers);
    for (Layer& l : model.layers) {
        l.spec.k_min = static_cast<int>(get_u32());
        l.spec.k_max = static_cast<int>(get_u32());
        l.spec.combiner = static_cast<Combiner>(get_u8());
        l.spec.activation = static_cast<Activation>(get_u8());
        l.spec.in_dim = get_u32();
        if (l.spec.k_max < l.spec.k_min || l.spec.k_max - l.spec.k_min > 15)
            throw ParseError("model file: invalid branch range");
        l.spec.out_dims.resize(l.spec.num_branches());
        for (auto& d : l.spec.out_dims) d = get_u32();
        l.branch_channels.resize(l.spec.num_branches());
        for (auto& sel : l.branch_channels) {
            std::uint32_t n = get_u32();
            sel.resize(n);
            for (auto& ch : sel) ch = get_u32();
        }
        l.weights.resize(l.spec.num_branches());
        for (int b = 0; b < l.spec.num_branches(); ++b) {
            std::uint32_t rows = l.branch_channels[b].empty()
                                     ? l.spec.in_dim
                                     : static_cast<std::uint32_t>(l.branch_channels[b].size());
            l.weights[b] = DenseMatrix(rows, l.spec.out_dims[b]);
            in.read(reinterpret_cast<char*>(l.weights[b].data.data()),
                    static_cast<std::streamsize>(l.weights[b].data.size() * sizeof(float)));
            if (!in) throw ParseError("model file truncated in weight block");
        }
    }
    model.validate();
    return model;
}

} // namespace

std::uint64_t GnnModel::content_id() const {
    std::ostringstream buf(std::ios::binary);
    write_model(*this, buf);
    std::string bytes = buf.str();
    std::uint64_t h = 1469598103934665603ull;
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

void save_model(const GnnModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open model file for writing: " + path);
    write_model(model, out);
    if (!out) throw ParseError("model write failed: " + path);
}

GnnModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open model file: " + path);
    return read_model(in);
}

} // namespace gnnprune
