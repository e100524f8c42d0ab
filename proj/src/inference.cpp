#include "gnnprune/inference.hpp"

#include <algorithm>
#include <chrono>

#include "gnnprune/rng.hpp"

namespace gnnprune {

void HiddenFeatureCache::store(std::size_t layer, std::uint32_t node, std::vector<float> vec,
                               std::int64_t version, std::uint64_t model_id) {
    if (layers_.size() <= layer) layers_.resize(layer + 1);
    auto& m = layers_[layer];
    auto it = m.find(node);
    ++seq_;
    if (it == m.end()) {
        m.emplace(node, Entry{std::move(vec), version, model_id, seq_});
        ++count_;
    } else {
        it->second = Entry{std::move(vec), version, model_id, seq_};
    }
    store_order_.push_back({layer, node, seq_});
    ++stores_;
    while (capacity_ > 0 && count_ > capacity_ && !store_order_.empty()) {
        Key k = store_order_.front();
        store_order_.pop_front();
        if (k.layer >= layers_.size()) continue;
        auto eit = layers_[k.layer].find(k.node);
        if (eit != layers_[k.layer].end() && eit->second.seq == k.seq) {
            layers_[k.layer].erase(eit);
            --count_;
        }
    }
}

bool HiddenFeatureCache::fresh(std::size_t layer, std::uint32_t node, std::int64_t version,
                               std::uint64_t model_id) const {
    if (layer >= layers_.size()) return false;
    auto it = layers_[layer].find(node);
    if (it == layers_[layer].end()) return false;
    const Entry& e = it->second;
    if (e.model_id != model_id) return false;
    std::int64_t age = version - e.version;
    return age >= 0 && age <= max_age_;
}

std::optional<std::vector<float>> HiddenFeatureCache::lookup(std::size_t layer, std::uint32_t node,
                                                             std::int64_t version, std::uint64_t model_id) {
    if (fresh(layer, node, version, model_id)) {
        ++hits_;
        return layers_[layer].at(node).vec;
    }
    ++misses_;
    return std::nullopt;
}

DenseMatrix full_inference(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj,
                           InferenceStats* stats) {
    require(g.num_nodes > 0, "full_inference: empty graph");
    require(model.in_dim() == g.attr_dim(), "full_inference: model input width != attr_dim");
    auto t0 = std::chrono::steady_clock::now();
    DenseMatrix h = g.attributes;
    if (stats) stats->macs_per_layer.clear();
    for (const Layer& layer : model.layers) {
        std::uint64_t before = MacCounter::value();
        h = layer_forward(layer, adj, h);
        if (stats) stats->macs_per_layer.push_back(MacCounter::value() - before);
    }
    if (stats) {
        stats->total_macs = 0;
        for (std::uint64_t m : stats->macs_per_layer) stats->total_macs += m;
        stats->latency_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    }
    return h;
}

namespace {

DenseMatrix gather_rows(const DenseMatrix& src, const std::vector<std::uint32_t>& rows) {
    DenseMatrix out(rows.size(), src.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(src.row(rows[i]).data(), src.cols, out.row(i).data());
    return out;
}

DenseMatrix gather_cols(const DenseMatrix& h, const std::vector<std::uint32_t>& cols) {
    if (cols.empty()) return h;
    DenseMatrix out(h.rows, cols.size());
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = h(i, cols[j]);
    return out;
}

DenseMatrix sub_spmm(const BatchPlan::SubAdj& sub, const DenseMatrix& h) {
    DenseMatrix out(h.rows, h.cols);
    MacCounter::add(static_cast<std::uint64_t>(sub.indices.size()) * h.cols);
    for (std::size_t v = 0; v + 1 < sub.indptr.size(); ++v) {
        float* dst = out.row(v).data();
        for (std::uint64_t e = sub.indptr[v]; e < sub.indptr[v + 1]; ++e) {
            float w = sub.values[e];
            const float* src = h.row(sub.indices[e]).data();
            for (std::size_t c = 0; c < h.cols; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

} // namespace

BatchPlan build_batch_plan(const Graph& g, const NormalizedAdjacency& adj, const GnnModel& model,
                           const BatchRequest& req, HiddenFeatureCache* cache) {
    require(!req.targets.empty(), "build_batch_plan: empty target set");
    for (std::uint32_t t : req.targets)
        require(t < g.num_nodes, "build_batch_plan: invalid target id " + std::to_string(t));
    std::size_t num_layers = model.num_layers();
    std::uint64_t model_id = model.content_id();

    BatchPlan plan;
    plan.num_layers = num_layers;
    plan.needed.resize(num_layers + 1);
    plan.visited.resize(num_layers + 1);
    plan.computed.resize(num_layers + 1);
    plan.sub_adj.resize(num_layers);
    plan.row_of.resize(num_layers + 1);

    plan.needed[num_layers] = req.targets;
    plan.computed[num_layers] = req.targets;

    // global hop depth from the targets, for cap lookup
    std::vector<std::int32_t> global_depth(g.num_nodes, -1);
    for (std::uint32_t t : req.targets) global_depth[t] = 0;

    auto cap_at = [&](std::int32_t hop_from) -> std::int64_t {
        // cap for the expansion from depth hop_from to hop_from+1
        if (static_cast<std::size_t>(hop_from) >= req.neighbor_caps.size()) return -1;
        return req.neighbor_caps[hop_from];
    };

    for (std::size_t layer = num_layers; layer >= 1; --layer) {
        int k_max = model.layers[layer - 1].spec.k_max;
        const std::vector<std::uint32_t>& roots = plan.computed[layer];

        // BFS closure up to k_max hops inside this layer; the hop depth used
        // for caps is the global depth from the targets
        std::vector<std::uint32_t> closure = roots;
        std::vector<std::int32_t> local_depth(g.num_nodes, -1);
        for (std::uint32_t r : roots) local_depth[r] = 0;

        struct RowEdges {
            std::uint32_t node;
            std::vector<std::uint32_t> nbrs;
            std::vector<float> vals;
        };
        std::vector<RowEdges> expanded;

        std::size_t head = 0;
        while (head < closure.size()) {
            std::uint32_t u = closure[head++];
            if (local_depth[u] >= k_max) continue;
            std::int64_t cap = cap_at(global_depth[u] < 0 ? 0 : global_depth[u]);
            std::uint64_t deg = g.degree(u);
            RowEdges row;
            row.node = u;
            if (cap < 0 || static_cast<std::uint64_t>(cap) >= deg) {
                for (std::uint64_t e = g.indptr[u]; e < g.indptr[u + 1]; ++e) {
                    row.nbrs.push_back(g.indices[e]);
                    row.vals.push_back(adj.values[e]);
                }
            } else if (cap > 0) {
                Rng rng = Rng::substream(req.seed, "plan/" + std::to_string(u) + "/" + std::to_string(layer));
                auto picks = rng.sample_without_replacement(static_cast<std::uint32_t>(deg),
                                                            static_cast<std::uint32_t>(cap));
                float w = adj.scheme == NormScheme::row_mean ? 1.0f / static_cast<float>(cap) : 0.0f;
                for (std::uint32_t pi : picks) {
                    std::uint64_t e = g.indptr[u] + pi;
                    row.nbrs.push_back(g.indices[e]);
                    // row_mean renormalizes over the sample; sym keeps the
                    // original value scaled to stay unbiased
                    row.vals.push_back(adj.scheme == NormScheme::row_mean
                                           ? w
                                           : adj.values[e] * static_cast<float>(deg) / static_cast<float>(cap));
                }
            }
            for (std::size_t j = 0; j < row.nbrs.size(); ++j) {
                std::uint32_t v = row.nbrs[j];
                if (local_depth[v] < 0) {
                    local_depth[v] = local_depth[u] + 1;
                    closure.push_back(v);
                }
                if (global_depth[v] < 0 || global_depth[v] > global_depth[u] + 1)
                    global_depth[v] = global_depth[u] + 1;
            }
            expanded.push_back(std::move(row));
        }

        // deterministic level ordering: roots in request/computed order kept
        // implicit; needed sets sorted by node id
        std::sort(closure.begin(), closure.end());
        plan.needed[layer - 1] = closure;
        auto& rows = plan.row_of[layer - 1];
        rows.clear();
        for (std::size_t i = 0; i < closure.size(); ++i) rows[closure[i]] = static_cast<std::uint32_t>(i);

        // cache split: visited supports at hidden levels are served from the
        // cache and are not expanded further toward the input
        std::vector<std::uint32_t>& vis = plan.visited[layer - 1];
        std::vector<std::uint32_t>& comp = plan.computed[layer - 1];
        vis.clear();
        comp.clear();
        for (std::uint32_t u : closure) {
            if (layer - 1 >= 1 && req.use_cache && cache && cache->fresh(layer - 1, u, g.version, model_id))
                vis.push_back(u);
            else
                comp.push_back(u);
        }

        // sub-CSR over needed[layer-1], rows in sorted order
        BatchPlan::SubAdj& sub = plan.sub_adj[layer - 1];
        std::sort(expanded.begin(), expanded.end(),
                  [](const RowEdges& a, const RowEdges& b) { return a.node < b.node; });
        sub.indptr.assign(closure.size() + 1, 0);
        std::size_t next_row = 0;
        std::size_t exp_idx = 0;
        for (std::size_t i = 0; i < closure.size(); ++i) {
            sub.indptr[i] = sub.indices.size();
            if (exp_idx < expanded.size() && expanded[exp_idx].node == closure[i]) {
                for (std::size_t j = 0; j < expanded[exp_idx].nbrs.size(); ++j) {
                    sub.indices.push_back(rows.at(expanded[exp_idx].nbrs[j]));
                    sub.values.push_back(expanded[exp_idx].vals[j]);
                }
                ++exp_idx;
            }
            (void)next_row;
        }
        sub.indptr[closure.size()] = sub.indices.size();
    }

    // remap for the target level
    auto& top = plan.row_of[num_layers];
    for (std::size_t i = 0; i < req.targets.size(); ++i) top[req.targets[i]] = static_cast<std::uint32_t>(i);
    return plan;
}

DenseMatrix batched_inference(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj,
                              const BatchRequest& req, HiddenFeatureCache* cache, InferenceStats* stats) {
    require(model.in_dim() == g.attr_dim(), "batched_inference: model input width != attr_dim");
    auto t0 = std::chrono::steady_clock::now();
    std::uint64_t macs0 = MacCounter::value();
    std::uint64_t model_id = model.content_id();
    std::uint64_t hits0 = cache ? cache->hits() : 0;
    std::uint64_t misses0 = cache ? cache->misses() : 0;

    BatchPlan plan = build_batch_plan(g, adj, model, req, cache);
    std::size_t num_layers = model.num_layers();

    if (stats) {
        stats->macs_per_layer.assign(num_layers, 0);
        stats->computed_supports.clear();
        stats->needed_supports.clear();
        for (std::size_t lvl = 0; lvl < num_layers; ++lvl) {
            stats->computed_supports.push_back(plan.computed[lvl].size());
            stats->needed_supports.push_back(plan.needed[lvl].size());
        }
    }

    // level 0: raw attributes of the input supports
    DenseMatrix h = gather_rows(g.attributes, plan.needed[0]);

    for (std::size_t layer = 1; layer <= num_layers; ++layer) {
        const Layer& l = model.layers[layer - 1];
        require(h.cols == l.spec.in_dim, "batched_inference: width chain mismatch");
        const BatchPlan::SubAdj& sub = plan.sub_adj[layer - 1];
        std::uint64_t macs_before = MacCounter::value();

        std::vector<DenseMatrix> parts;
        for (int b = 0; b < l.spec.num_branches(); ++b) {
            int k = l.spec.k_min + b;
            DenseMatrix x = gather_cols(h, l.branch_channels[b]);
            DenseMatrix part;
            if (k == 0) {
                part = matmul(x, l.weights[b]);
            } else if (l.weights[b].cols < x.cols) {
                part = matmul(x, l.weights[b]);
                for (int kk = 0; kk < k; ++kk) part = sub_spmm(sub, part);
            } else {
                DenseMatrix a = x;
                for (int kk = 0; kk < k; ++kk) a = sub_spmm(sub, a);
                part = matmul(a, l.weights[b]);
            }
            parts.push_back(std::move(part));
        }
        DenseMatrix out;
        if (l.spec.combiner == Combiner::concat) {
            out = hconcat(parts);
        } else {
            out = parts.front();
            for (std::size_t p = 1; p < parts.size(); ++p)
                for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += parts[p].data[i];
            float inv = 1.0f / static_cast<float>(parts.size());
            for (float& v : out.data) v *= inv;
        }
        if (l.spec.activation == Activation::relu) out = relu(out);

        if (stats) stats->macs_per_layer[layer - 1] = MacCounter::value() - macs_before;

        // assemble the next level: computed rows from `out`, visited rows
        // from the cache
        const auto& needed = plan.needed[layer];
        DenseMatrix next(needed.size(), out.cols);
        const auto& prev_rows = plan.row_of[layer - 1];
        for (std::size_t i = 0; i < needed.size(); ++i) {
            std::uint32_t node = needed[i];
            bool from_cache = false;
            if (layer < num_layers && req.use_cache && cache) {
                // visited nodes were split out at plan time
                auto& vis = plan.visited[layer];
                from_cache = std::binary_search(vis.begin(), vis.end(), node);
            }
            if (from_cache) {
                auto vec = cache->lookup(layer, node, g.version, model_id);
                require(vec.has_value(), "batched_inference: cache entry vanished");
                if (vec->size() != out.cols)
                    throw Error("batched_inference: cache vector width mismatch (corruption)");
                std::copy(vec->begin(), vec->end(), next.row(i).data());
            } else {
                auto it = prev_rows.find(node);
                require(it != prev_rows.end(), "batched_inference: plan inconsistency");
                std::copy_n(out.row(it->second).data(), out.cols, next.row(i).data());
            }
        }
        h = std::move(next);

        // store the roots' hidden features for future batches
        if (req.store_roots && cache && layer < num_layers) {
            for (std::uint32_t t : req.targets) {
                auto pos = std::lower_bound(needed.begin(), needed.end(), t);
                if (pos != needed.end() && *pos == t) {
                    std::size_t i = static_cast<std::size_t>(pos - needed.begin());
                    std::vector<float> vec(h.row(i).begin(), h.row(i).end());
                    cache->store(layer, t, std::move(vec), g.version, model_id);
                }
            }
        }
    }

    // output rows in request order (needed[L] is the target list as given)
    if (stats) {
        stats->total_macs = MacCounter::value() - macs0;
        stats->cache_hits = cache ? cache->hits() - hits0 : 0;
        stats->cache_misses = cache ? cache->misses() - misses0 : 0;
        stats->latency_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    }
    return h;
}

void warm_cache_train_val(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj,
                          HiddenFeatureCache& cache) {
    std::uint64_t model_id = model.content_id();
    DenseMatrix h = g.attributes;
    for (std::size_t layer = 1; layer < model.num_layers(); ++layer) {
        h = layer_forward(model.layers[layer - 1], adj, h);
        for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
            if (g.split[v] == static_cast<std::uint8_t>(Split::test)) continue;
            std::vector<float> vec(h.row(v).begin(), h.row(v).end());
            cache.store(layer, static_cast<std::uint32_t>(v), std::move(vec), g.version, model_id);
        }
    }
}

} // namespace gnnprune
