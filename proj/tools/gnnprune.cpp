#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gnnprune/cost.hpp"
#include "gnnprune/graph.hpp"
#include "gnnprune/inference.hpp"
#include "gnnprune/model.hpp"
#include "gnnprune/pruner.hpp"
#include "gnnprune/synth.hpp"
#include "gnnprune/trainer.hpp"

using nlohmann::json;
using namespace gnnprune;

namespace {

json load_config(const std::string& path) {
    json j;
    try {
        if (path == "-") {
            std::cin >> j;
        } else {
            std::ifstream in(path);
            if (!in) throw ConfigError("config file not found: " + path);
            in >> j;
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    return j;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

std::uint64_t root_seed(const json& cfg) { return cfg.value("seed", 0ull); }

NormScheme parse_norm(const std::string& s) {
    if (s == "row_mean") return NormScheme::row_mean;
    if (s == "sym") return NormScheme::sym;
    throw ConfigError("unknown normalization: " + s);
}

std::vector<LayerSpec> parse_arch(const json& cfg, std::uint32_t attr_dim) {
    if (!cfg.contains("arch")) throw ConfigError("config is missing the arch section");
    const json& a = cfg.at("arch");
    check_keys(a, {"layers"}, "arch");
    if (!a.contains("layers") || !a.at("layers").is_array() || a.at("layers").empty())
        throw ConfigError("arch.layers must be a non-empty array");
    std::vector<LayerSpec> specs;
    std::uint32_t in_dim = attr_dim;
    for (const json& lj : a.at("layers")) {
        check_keys(lj, {"k_min", "k_max", "combiner", "activation", "out_dims"}, "arch.layers[]");
        LayerSpec s;
        s.k_min = lj.value("k_min", 0);
        s.k_max = lj.value("k_max", 0);
        std::string comb = lj.value("combiner", "concat");
        if (comb == "concat")
            s.combiner = Combiner::concat;
        else if (comb == "mean")
            s.combiner = Combiner::mean;
        else
            throw ConfigError("unknown combiner: " + comb);
        std::string act = lj.value("activation", "relu");
        if (act == "relu")
            s.activation = Activation::relu;
        else if (act == "none")
            s.activation = Activation::none;
        else
            throw ConfigError("unknown activation: " + act);
        s.in_dim = in_dim;
        for (const json& d : lj.at("out_dims")) s.out_dims.push_back(d.get<std::uint32_t>());
        s.validate();
        in_dim = s.out_width();
        specs.push_back(std::move(s));
    }
    return specs;
}

TrainConfig parse_train(const json& cfg) {
    TrainConfig tc;
    tc.seed = root_seed(cfg);
    if (!cfg.contains("train")) return tc;
    const json& t = cfg.at("train");
    check_keys(t, {"epochs", "lr", "optimizer", "loss", "patience", "adam_beta1", "adam_beta2", "adam_eps"},
               "train");
    tc.epochs = t.value("epochs", tc.epochs);
    tc.learning_rate = t.value("lr", tc.learning_rate);
    tc.early_stop_patience = t.value("patience", tc.early_stop_patience);
    tc.adam_beta1 = t.value("adam_beta1", tc.adam_beta1);
    tc.adam_beta2 = t.value("adam_beta2", tc.adam_beta2);
    tc.adam_eps = t.value("adam_eps", tc.adam_eps);
    std::string opt = t.value("optimizer", "adam");
    if (opt == "adam")
        tc.optimizer = Optimizer::adam;
    else if (opt == "sgd")
        tc.optimizer = Optimizer::sgd;
    else
        throw ConfigError("unknown optimizer: " + opt);
    std::string loss = t.value("loss", "softmax_ce");
    if (loss == "softmax_ce")
        tc.loss = LossKind::softmax_ce;
    else if (loss == "sigmoid_bce")
        tc.loss = LossKind::sigmoid_bce;
    else
        throw ConfigError("unknown loss: " + loss);
    tc.validate();
    return tc;
}

struct GraphSection {
    std::string path;
    NormScheme norm = NormScheme::row_mean;
};

GraphSection parse_graph_section(const json& cfg, const std::string& cli_path) {
    GraphSection gs;
    gs.path = cli_path;
    if (cfg.contains("graph")) {
        const json& g = cfg.at("graph");
        check_keys(g, {"path", "normalization"}, "graph");
        if (gs.path.empty()) gs.path = g.value("path", "");
        gs.norm = parse_norm(g.value("normalization", "row_mean"));
    }
    if (gs.path.empty()) throw ConfigError("no graph path given (graph.path or --graph)");
    return gs;
}

void validate_top_level(const json& cfg) {
    check_keys(cfg, {"seed", "graph", "arch", "train", "prune", "infer", "bench", "synth"}, "config");
}

std::vector<std::uint32_t> pick_targets(const Graph& g, const std::string& which) {
    std::vector<std::uint32_t> t;
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
        bool take = which == "all" || (which == "train" && g.split[v] == 0) ||
                    (which == "val" && g.split[v] == 1) || (which == "test" && g.split[v] == 2);
        if (take) t.push_back(static_cast<std::uint32_t>(v));
    }
    if (t.empty()) throw ConfigError("target split \"" + which + "\" selects no nodes");
    return t;
}

void write_predictions(const Graph& g, const std::vector<std::uint32_t>& nodes, const DenseMatrix& logits,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write predictions file: " + path);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out << nodes[i] << '\t';
        if (g.label_mode == LabelMode::single) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.cols; ++c)
                if (logits(i, c) > logits(i, best)) best = c;
            out << best;
        } else {
            for (std::size_t c = 0; c < logits.cols; ++c) {
                if (c) out << ',';
                out << (logits(i, c) > 0.0f ? 1 : 0);
            }
        }
        out << '\n';
    }
}

json report_to_json(const std::vector<LayerPruneReport>& reports) {
    json arr = json::array();
    for (const LayerPruneReport& r : reports) {
        arr.push_back({{"layer_idx", r.layer_idx},
                       {"c", r.channels},
                       {"retained", r.retained},
                       {"eta", r.eta},
                       {"final_lambda", r.final_lambda},
                       {"epochs_run", r.epochs_run},
                       {"stop_reason", to_string(r.stop_reason)},
                       {"reconstruction_mse_before", r.reconstruction_mse_before},
                       {"reconstruction_mse_after", r.reconstruction_mse_after}});
    }
    return json{{"layers", arr}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << text;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const json& cfg, const std::string& out_path) {
    if (!cfg.contains("synth")) throw ConfigError("config is missing the synth section");
    const json& s = cfg.at("synth");
    check_keys(s,
               {"kind", "n", "blocks", "p_in", "p_out", "attr_dim", "noise_sigma", "mean_scale", "train_frac",
                "val_frac", "label_mode", "branching", "depth", "attach"},
               "synth");
    std::string kind = s.value("kind", "sbm");
    Graph g;
    if (kind == "sbm") {
        SbmParams p;
        p.n = s.value("n", 0ull);
        p.blocks = s.value("blocks", 2u);
        p.p_in = s.value("p_in", 0.02);
        p.p_out = s.value("p_out", 0.002);
        p.attr_dim = s.value("attr_dim", 16u);
        p.noise_sigma = s.value("noise_sigma", 1.0);
        p.mean_scale = s.value("mean_scale", 1.0);
        p.train_frac = s.value("train_frac", 0.6);
        p.val_frac = s.value("val_frac", 0.2);
        p.label_mode = s.value("label_mode", "single") == std::string("multi") ? LabelMode::multi : LabelMode::single;
        p.seed = root_seed(cfg);
        g = synth_sbm(p);
    } else if (kind == "tree") {
        g = synth_tree(s.value("branching", 2u), s.value("depth", 4u), s.value("attr_dim", 16u), root_seed(cfg));
    } else if (kind == "power_law") {
        g = synth_power_law(s.value("n", 0ull), s.value("attach", 2u), s.value("blocks", 2u),
                            s.value("attr_dim", 16u), root_seed(cfg));
    } else {
        throw ConfigError("unknown synth kind: " + kind);
    }
    save_graph(g, out_path);
    DegreeStats ds = degree_stats(g);
    std::cout << "wrote " << out_path << ": " << g.num_nodes << " nodes, " << g.num_edges()
              << " arcs, avg degree " << ds.avg_degree << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const json& cfg, const std::string& graph_path, const std::string& out_path,
              const std::string& log_path) {
    GraphSection gs = parse_graph_section(cfg, graph_path);
    Graph g = load_graph(gs.path);
    std::vector<LayerSpec> arch = parse_arch(cfg, g.attr_dim());
    if (arch.back().out_width() != g.num_classes)
        throw ConfigError("last layer width must equal num_classes");
    TrainConfig tc = parse_train(cfg);
    if (g.label_mode == LabelMode::multi) tc.loss = LossKind::sigmoid_bce;
    TrainResult res = train(g, arch, tc);
    save_model(res.model, out_path);
    if (!log_path.empty()) write_train_log_csv(res.log, log_path);
    std::cout << "best val F1 " << res.best_val_f1 << ", wrote " << out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- prune

int cmd_prune(const json& cfg, const std::string& graph_path, const std::string& model_path,
              const std::string& out_path, const std::string& report_path, bool do_retrain) {
    GraphSection gs = parse_graph_section(cfg, graph_path);
    Graph g = load_graph(gs.path);
    GnnModel model = load_model(model_path);

    PruneScheme scheme = PruneScheme::full;
    double eta = 0.5;
    PenaltySchedule sched;
    RefitMode refit = RefitMode::closed_form;
    std::uint32_t batch_size = 1024;
    if (cfg.contains("prune")) {
        const json& p = cfg.at("prune");
        check_keys(p, {"scheme", "eta", "schedule", "refit", "batch_size"}, "prune");
        std::string sch = p.value("scheme", "full");
        if (sch == "full")
            scheme = PruneScheme::full;
        else if (sch == "batched")
            scheme = PruneScheme::batched;
        else
            throw ConfigError("unknown prune scheme: " + sch);
        eta = p.value("eta", eta);
        if (p.contains("schedule")) {
            const json& sj = p.at("schedule");
            check_keys(sj, {"lambda0", "growth", "max_epochs", "over_penalty_window", "lr"}, "prune.schedule");
            sched.lambda0 = sj.value("lambda0", sched.lambda0);
            sched.growth = sj.value("growth", sched.growth);
            sched.max_epochs = sj.value("max_epochs", sched.max_epochs);
            sched.over_penalty_window = sj.value("over_penalty_window", sched.over_penalty_window);
            sched.lr = sj.value("lr", sched.lr);
            sched.validate();
        }
        std::string rf = p.value("refit", "closed_form");
        if (rf == "closed_form")
            refit = RefitMode::closed_form;
        else if (rf == "sgd")
            refit = RefitMode::sgd;
        else
            throw ConfigError("unknown refit mode: " + rf);
        batch_size = p.value("batch_size", batch_size);
    }

    TrainingGraph tg = training_graph(g);
    PruneResult res = prune_model(model, tg.graph, scheme, eta, sched, refit, batch_size, root_seed(cfg));
    GnnModel folded = fold_mask(res.model);
    if (do_retrain) {
        TrainConfig tc = parse_train(cfg);
        if (g.label_mode == LabelMode::multi) tc.loss = LossKind::sigmoid_bce;
        TrainResult rt = retrain(g, folded, tc);
        folded = rt.model;
    }
    save_model(folded, out_path);
    if (!report_path.empty()) write_text(report_path, report_to_json(res.reports).dump(2) + "\n");
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- infer

int cmd_infer(const json& cfg, const std::string& graph_path, const std::string& model_path,
              const std::string& out_path, const std::string& inst_path, std::string mode, bool cache_flag,
              bool warm_flag, std::int64_t cap_hop2, std::int64_t batch_size_flag) {
    GraphSection gs = parse_graph_section(cfg, graph_path);
    Graph g = load_graph(gs.path);
    GnnModel model = load_model(model_path);
    NormalizedAdjacency adj = normalize(g, gs.norm);

    std::string targets_which = "test";
    std::uint32_t batch_size = 512;
    std::vector<std::int64_t> caps = {-1, 32};
    bool use_cache = false;
    std::size_t cache_capacity = 0;
    if (cfg.contains("infer")) {
        const json& i = cfg.at("infer");
        check_keys(i, {"mode", "batch_size", "caps", "cache", "cache_capacity", "targets"}, "infer");
        if (mode.empty()) mode = i.value("mode", "full");
        batch_size = i.value("batch_size", batch_size);
        if (i.contains("caps")) caps = i.at("caps").get<std::vector<std::int64_t>>();
        use_cache = i.value("cache", false);
        cache_capacity = i.value("cache_capacity", 0ull);
        targets_which = i.value("targets", targets_which);
    }
    if (mode.empty()) mode = "full";
    if (cache_flag) use_cache = true;
    if (cap_hop2 >= 0) {
        if (caps.size() < 2) caps.resize(2, -1);
        caps[1] = cap_hop2;
    }
    if (batch_size_flag > 0) batch_size = static_cast<std::uint32_t>(batch_size_flag);

    json inst;
    inst["mode"] = mode;
    if (mode == "full") {
        InferenceStats stats;
        std::uint64_t macs0 = MacCounter::value();
        DenseMatrix logits = full_inference(model, g, adj, &stats);
        std::vector<std::uint32_t> all(g.num_nodes);
        for (std::uint64_t v = 0; v < g.num_nodes; ++v) all[v] = static_cast<std::uint32_t>(v);
        write_predictions(g, all, logits, out_path);
        inst["macs_per_layer"] = stats.macs_per_layer;
        inst["macs"] = stats.total_macs;
        inst["latency_us"] = stats.latency_us;
        (void)macs0;
    } else if (mode == "batched") {
        std::vector<std::uint32_t> targets = pick_targets(g, targets_which);
        HiddenFeatureCache cache(cache_capacity);
        if (warm_flag) warm_cache_train_val(model, g, adj, cache);
        DenseMatrix logits(targets.size(), model.out_dim());
        json batches = json::array();
        double total_latency = 0;
        std::uint64_t total_macs = 0;
        for (std::size_t lo = 0; lo < targets.size(); lo += batch_size) {
            std::size_t hi = std::min(targets.size(), lo + batch_size);
            BatchRequest req;
            req.targets.assign(targets.begin() + lo, targets.begin() + hi);
            req.neighbor_caps = caps;
            req.seed = root_seed(cfg);
            req.use_cache = use_cache;
            req.store_roots = use_cache;
            InferenceStats stats;
            DenseMatrix out = batched_inference(model, g, adj, req, use_cache || warm_flag ? &cache : nullptr,
                                                &stats);
            for (std::size_t r = 0; r < out.rows; ++r)
                std::copy_n(out.row(r).data(), out.cols, logits.row(lo + r).data());
            batches.push_back({{"targets", req.targets.size()},
                               {"computed_supports", stats.computed_supports},
                               {"needed_supports", stats.needed_supports},
                               {"cache_hits", stats.cache_hits},
                               {"cache_misses", stats.cache_misses},
                               {"macs", stats.total_macs},
                               {"latency_us", stats.latency_us}});
            total_latency += stats.latency_us;
            total_macs += stats.total_macs;
        }
        write_predictions(g, targets, logits, out_path);
        inst["batches"] = batches;
        inst["macs"] = total_macs;
        inst["latency_us"] = total_latency;
        inst["cache_entries"] = cache.size();
    } else {
        throw ConfigError("unknown infer mode: " + mode);
    }
    if (!inst_path.empty()) write_text(inst_path, inst.dump(2) + "\n");
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- estimate

int cmd_estimate(const json& cfg, const std::string& graph_path, const std::string& model_path,
                 std::string mode, const std::string& out_path) {
    GraphSection gs = parse_graph_section(cfg, graph_path);
    Graph g = load_graph(gs.path);
    GnnModel model = load_model(model_path);
    DegreeStats ds = degree_stats(g);
    std::vector<LayerDims> dims = model_dims(model);

    std::vector<std::int64_t> caps = {-1, 32};
    double cache_fraction = 0.0;
    if (cfg.contains("infer")) {
        const json& i = cfg.at("infer");
        if (mode.empty() && i.contains("mode")) mode = i.at("mode").get<std::string>();
        if (i.contains("caps")) caps = i.at("caps").get<std::vector<std::int64_t>>();
    }
    if (mode.empty()) mode = "full";

    CostReport r = mode == "batched"
                       ? batched_cost(dims, ds.avg_degree, model.num_layers(), caps, cache_fraction)
                       : full_cost(dims, g.num_nodes, ds.avg_degree);
    std::cout << "mode: " << mode << "\n";
    std::cout << "layer  macs/node\n";
    for (std::size_t i = 0; i < r.macs_per_node.size(); ++i)
        std::cout << "  " << (i + 1) << "    " << r.macs_per_node[i] << "\n";
    std::cout << "total macs/node: " << r.total_macs_per_node << "\n";
    std::cout << "memory bytes:    " << r.memory_bytes << "\n";
    if (!out_path.empty()) write_text(out_path, cost_report_json(r) + "\n");
    return 0;
}

// ---------------------------------------------------------------- bench

double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    double idx = p * (v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(idx);
    std::size_t hi = std::min(v.size() - 1, lo + 1);
    double frac = idx - lo;
    return v[lo] * (1 - frac) + v[hi] * frac;
}

int cmd_bench(const json& cfg, const std::string& graph_path, const std::string& out_path,
              const std::string& dataset_name) {
    GraphSection gs = parse_graph_section(cfg, graph_path);
    Graph g = load_graph(gs.path);
    NormalizedAdjacency adj = normalize(g, gs.norm);

    if (!cfg.contains("bench")) throw ConfigError("config is missing the bench section");
    const json& b = cfg.at("bench");
    check_keys(b, {"repeats", "warmup", "runs", "batch_size", "caps"}, "bench");
    int repeats = b.value("repeats", 5);
    int warmup = b.value("warmup", 1);
    std::uint32_t batch_size = b.value("batch_size", 512u);
    std::vector<std::int64_t> caps = {-1, 32};
    if (b.contains("caps")) caps = b.at("caps").get<std::vector<std::int64_t>>();
    if (!b.contains("runs") || !b.at("runs").is_array()) throw ConfigError("bench.runs must be an array");

    std::string dataset = dataset_name;
    if (dataset.empty()) dataset = std::filesystem::path(gs.path).stem().string();

    std::ostringstream csv;
    csv << "dataset,scheme,eta,mode,macs_per_node,mem_bytes,latency_us_p50,latency_us_p95,f1_micro\n";
    std::vector<std::uint32_t> test_targets = pick_targets(g, "test");
    DegreeStats ds = degree_stats(g);

    for (const json& run : b.at("runs")) {
        check_keys(run, {"model", "scheme", "eta", "mode"}, "bench.runs[]");
        std::string model_path = run.at("model").get<std::string>();
        std::string scheme = run.value("scheme", "none");
        double eta = run.value("eta", 1.0);
        std::string mode = run.value("mode", "full");
        GnnModel model = load_model(model_path);
        std::vector<LayerDims> dims = model_dims(model);
        CostReport cost = mode == "batched" ? batched_cost(dims, ds.avg_degree, model.num_layers(), caps, 0.0)
                                            : full_cost(dims, g.num_nodes, ds.avg_degree);
        double f1 = evaluate_f1(model, g, adj, Split::test);

        std::vector<double> lat;
        for (int rep = 0; rep < warmup + repeats; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            if (mode == "batched") {
                for (std::size_t lo = 0; lo < test_targets.size(); lo += batch_size) {
                    std::size_t hi = std::min(test_targets.size(), lo + batch_size);
                    BatchRequest req;
                    req.targets.assign(test_targets.begin() + lo, test_targets.begin() + hi);
                    req.neighbor_caps = caps;
                    req.seed = root_seed(cfg);
                    batched_inference(model, g, adj, req, nullptr, nullptr);
                }
            } else {
                full_inference(model, g, adj, nullptr);
            }
            double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
            if (rep >= warmup) lat.push_back(us);
        }
        double denom = mode == "batched" ? static_cast<double>(test_targets.size())
                                         : static_cast<double>(g.num_nodes);
        csv << dataset << ',' << scheme << ',' << eta << ',' << mode << ',' << cost.total_macs_per_node << ','
            << cost.memory_bytes << ',' << percentile(lat, 0.5) / denom << ',' << percentile(lat, 0.95) / denom
            << ',' << f1 << "\n";
    }
    write_text(out_path, csv.str());
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GNN inference engine with LASSO channel pruning"};
    app.require_subcommand(1);

    std::string config_path, graph_path, model_path, out_path, report_path, log_path, inst_path, mode,
        dataset_name;
    bool cache_flag = false, warm_flag = false, retrain_flag = false;
    std::int64_t cap_hop2 = -1, batch_size_flag = -1;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON run config path (- for stdin)")->required();
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic graph file");
    add_common(synth);
    synth->add_option("--out", out_path, "output graph path")->required();

    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    add_common(train_cmd);
    train_cmd->add_option("--graph", graph_path, "graph file (overrides config)");
    train_cmd->add_option("--out", out_path, "output model path")->required();
    train_cmd->add_option("--log", log_path, "training log CSV path");

    CLI::App* prune_cmd = app.add_subcommand("prune", "prune a model's channels");
    add_common(prune_cmd);
    prune_cmd->add_option("--graph", graph_path, "graph file (overrides config)");
    prune_cmd->add_option("--model", model_path, "input model path")->required();
    prune_cmd->add_option("--out", out_path, "output (folded) model path")->required();
    prune_cmd->add_option("--report", report_path, "prune report JSON path");
    prune_cmd->add_flag("--retrain", retrain_flag, "fine-tune the folded model");

    CLI::App* infer_cmd = app.add_subcommand("infer", "run full or batched inference");
    add_common(infer_cmd);
    infer_cmd->add_option("--graph", graph_path, "graph file (overrides config)");
    infer_cmd->add_option("--model", model_path, "model path")->required();
    infer_cmd->add_option("--out", out_path, "predictions output path")->required();
    infer_cmd->add_option("--instrumentation", inst_path, "instrumentation JSON path");
    infer_cmd->add_option("--mode", mode, "full or batched (overrides config)");
    infer_cmd->add_flag("--cache", cache_flag, "use the hidden-feature cache (store roots)");
    infer_cmd->add_flag("--warm-cache-train-val", warm_flag, "pre-fill the cache from train/val nodes");
    infer_cmd->add_option("--cap-hop2", cap_hop2, "neighbor cap at hop 2 (default 32)");
    infer_cmd->add_option("--batch-size", batch_size_flag, "batched-mode target batch size (default 512)");

    CLI::App* est_cmd = app.add_subcommand("estimate", "analytic MAC/memory estimate");
    add_common(est_cmd);
    est_cmd->add_option("--graph", graph_path, "graph file (overrides config)");
    est_cmd->add_option("--model", model_path, "model path")->required();
    est_cmd->add_option("--mode", mode, "full or batched");
    est_cmd->add_option("--out", out_path, "cost report JSON path");

    CLI::App* bench_cmd = app.add_subcommand("bench", "benchmark models into a CSV");
    add_common(bench_cmd);
    bench_cmd->add_option("--graph", graph_path, "graph file (overrides config)");
    bench_cmd->add_option("--out", out_path, "CSV output path")->required();
    bench_cmd->add_option("--dataset", dataset_name, "dataset name for the CSV column");

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = load_config(config_path);
        validate_top_level(cfg);
        if (synth->parsed()) return cmd_synth(cfg, out_path);
        if (train_cmd->parsed()) return cmd_train(cfg, graph_path, out_path, log_path);
        if (prune_cmd->parsed())
            return cmd_prune(cfg, graph_path, model_path, out_path, report_path, retrain_flag);
        if (infer_cmd->parsed())
            return cmd_infer(cfg, graph_path, model_path, out_path, inst_path, mode, cache_flag, warm_flag,
                             cap_hop2, batch_size_flag);
        if (est_cmd->parsed()) return cmd_estimate(cfg, graph_path, model_path, mode, out_path);
        if (bench_cmd->parsed()) return cmd_bench(cfg, graph_path, out_path, dataset_name);
    } catch (const std::exception& e) {
        const char* type = "error";
        if (dynamic_cast<const ConfigError*>(&e))
            type = "config_error";
        else if (dynamic_cast<const ParseError*>(&e))
            type = "parse_error";
        else if (dynamic_cast<const ContractViolation*>(&e))
            type = "contract_violation";
        json err = {{"error", {{"type", type}, {"message", e.what()}}}};
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
