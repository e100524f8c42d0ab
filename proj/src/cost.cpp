#include "gnnprune/cost.hpp"

#include <algorithm>
#include <sstream>

namespace gnnprune {

std::vector<LayerDims> model_dims(const GnnModel& model) {
    std::vector<LayerDims> dims;
    for (const Layer& l : model.layers) {
        LayerDims ld;
        for (int b = 0; b < l.spec.num_branches(); ++b)
            ld.branches.push_back({l.spec.k_min + b, l.branch_in_dim(b), l.spec.out_dims[b]});
        dims.push_back(std::move(ld));
    }
    return dims;
}

namespace {

double layer_macs(const LayerDims& ld, double d) {
    double macs = 0.0;
    for (const BranchDims& b : ld.branches) {
        if (b.k >= 1) macs += static_cast<double>(b.k) * d * std::min(b.f_in, b.f_out);
        macs += static_cast<double>(b.f_in) * b.f_out;
    }
    return macs;
}

double layer_activation_width(const LayerDims& ld) {
    double w = ld.branches.front().f_in;
    for (const BranchDims& b : ld.branches) w += b.f_out;
    return w;
}

double layer_weight_entries(const LayerDims& ld) {
    double e = 0.0;
    for (const BranchDims& b : ld.branches) e += static_cast<double>(b.f_in) * b.f_out;
    return e;
}

} // namespace

CostReport full_cost(const std::vector<LayerDims>& dims, std::uint64_t num_nodes, double avg_degree) {
    require(!dims.empty(), "full_cost: empty dims");
    CostReport r;
    r.mode = CostMode::full;
    double mem = 0.0;
    for (const LayerDims& ld : dims) {
        double m = layer_macs(ld, avg_degree);
        r.macs_per_node.push_back(m);
        r.total_macs_per_node += m;
        mem += static_cast<double>(num_nodes) * layer_activation_width(ld) + layer_weight_entries(ld);
    }
    r.memory_bytes = static_cast<std::uint64_t>(mem * 4.0);
    return r;
}

CostReport batched_cost(const std::vector<LayerDims>& dims, double avg_degree, std::size_t num_layers,
                        const std::vector<std::int64_t>& caps, double cache_fraction) {
    require(num_layers >= 1 && dims.size() == num_layers, "batched_cost: dims/num_layers mismatch");
    require(cache_fraction >= 0.0 && cache_fraction <= 1.0, "batched_cost: cache_fraction outside [0,1]");
    CostReport r;
    r.mode = CostMode::batched;

    auto capped = [&](std::size_t hop) {
        double d = avg_degree;
        if (hop < caps.size() && caps[hop] >= 0) d = std::min(d, static_cast<double>(caps[hop]));
        return d;
    };

    double mem = 0.0;
    for (std::size_t i = 1; i <= num_layers; ++i) {
        // support multiplier for layer i: targets plus their expansion over
        // the remaining L-i global hops; cached hidden supports stop the
        // recursion, so every expanded term is discounted
        double mult = 1.0;
        double fanout = 1.0;
        for (std::size_t l = 1; l <= num_layers - i; ++l) {
            fanout *= capped(l - 1);
            double term = fanout;
            if (i < num_layers) term *= 1.0 - cache_fraction;
            mult += term;
        }
        r.supports_per_layer.push_back(mult);
        double m = mult * layer_macs(dims[i - 1], avg_degree);
        r.macs_per_node.push_back(m);
        r.total_macs_per_node += m;
        mem += mult * layer_activation_width(dims[i - 1]) + layer_weight_entries(dims[i - 1]);
    }
    r.memory_bytes = static_cast<std::uint64_t>(mem * 4.0);
    return r;
}

std::string cost_report_json(const CostReport& r) {
    std::ostringstream os;
    os << "{\"mode\":\"" << (r.mode == CostMode::full ? "full" : "batched") << "\",";
    os << "\"macs_per_node\":[";
    for (std::size_t i = 0; i < r.macs_per_node.size(); ++i)
        os << (i ? "," : "") << r.macs_per_node[i];
    os << "],\"total_macs_per_node\":" << r.total_macs_per_node;
    os << ",\"memory_bytes\":" << r.memory_bytes;
    os << ",\"supports_per_layer\":[";
    for (std::size_t i = 0; i < r.supports_per_layer.size(); ++i)
        os << (i ? "," : "") << r.supports_per_layer[i];
    os << "]}";
    return os.str();
}

} // namespace gnnprune
