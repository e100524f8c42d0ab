#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gnnprune/cost.hpp"
#include "gnnprune/graph.hpp"
#include "gnnprune/inference.hpp"
#include "gnnprune/model.hpp"
#include "gnnprune/pruner.hpp"
#include "gnnprune/synth.hpp"
#include "gnnprune/trainer.hpp"

namespace py = pybind11;
using namespace gnnprune;

namespace {

py::array_t<float> mat_to_numpy(const DenseMatrix& m) {
    py::array_t<float> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_gnnprune, mod) {
    mod.doc() = "GNN inference engine with LASSO channel pruning";

    py::register_exception<Error>(mod, "GnnpruneError");

    py::class_<Graph>(mod, "Graph")
        .def_property_readonly("num_nodes", [](const Graph& g) { return g.num_nodes; })
        .def_property_readonly("num_edges", &Graph::num_edges)
        .def_property_readonly("attr_dim", &Graph::attr_dim)
        .def_property_readonly("num_classes", [](const Graph& g) { return g.num_classes; })
        .def("attributes", [](const Graph& g) { return mat_to_numpy(g.attributes); });

    py::class_<GnnModel>(mod, "GnnModel")
        .def_property_readonly("num_layers", &GnnModel::num_layers)
        .def_property_readonly("in_dim", &GnnModel::in_dim)
        .def_property_readonly("out_dim", &GnnModel::out_dim);

    mod.def("load_graph", &load_graph, py::arg("path"));
    mod.def("save_graph", &save_graph, py::arg("graph"), py::arg("path"));
    mod.def("load_model", &load_model, py::arg("path"));
    mod.def("save_model", &save_model, py::arg("model"), py::arg("path"));

    mod.def(
        "synth_sbm",
        [](std::uint64_t n, std::uint32_t blocks, double p_in, double p_out, std::uint32_t attr_dim,
           std::uint64_t seed) {
            SbmParams p;
            p.n = n;
            p.blocks = blocks;
            p.p_in = p_in;
            p.p_out = p_out;
            p.attr_dim = attr_dim;
            p.seed = seed;
            return synth_sbm(p);
        },
        py::arg("n"), py::arg("blocks") = 2, py::arg("p_in") = 0.02, py::arg("p_out") = 0.002,
        py::arg("attr_dim") = 16, py::arg("seed") = 0);

    mod.def(
        "train_model",
        [](const Graph& g, const std::vector<std::tuple<int, int, std::vector<std::uint32_t>>>& layers,
           std::uint32_t epochs, double lr, std::uint64_t seed) {
            std::vector<LayerSpec> arch;
            std::uint32_t in_dim = g.attr_dim();
            for (std::size_t i = 0; i < layers.size(); ++i) {
                LayerSpec s;
                s.k_min = std::get<0>(layers[i]);
                s.k_max = std::get<1>(layers[i]);
                s.out_dims = std::get<2>(layers[i]);
                s.in_dim = in_dim;
                s.activation = i + 1 == layers.size() ? Activation::none : Activation::relu;
                s.validate();
                in_dim = s.out_width();
                arch.push_back(std::move(s));
            }
            TrainConfig tc;
            tc.epochs = epochs;
            tc.learning_rate = lr;
            tc.seed = seed;
            if (g.label_mode == LabelMode::multi) tc.loss = LossKind::sigmoid_bce;
            TrainResult r = train(g, arch, tc);
            return py::make_tuple(r.model, r.best_val_f1);
        },
        py::arg("graph"), py::arg("layers"), py::arg("epochs") = 100, py::arg("lr") = 0.01, py::arg("seed") = 0,
        "layers: list of (k_min, k_max, out_dims); last layer width must equal num_classes");

    mod.def(
        "prune",
        [](const GnnModel& model, const Graph& g, const std::string& scheme, double eta, std::uint64_t seed) {
            TrainingGraph tg = training_graph(g);
            PruneScheme s = scheme == "batched" ? PruneScheme::batched : PruneScheme::full;
            PruneResult r = prune_model(model, tg.graph, s, eta, PenaltySchedule{}, RefitMode::closed_form,
                                        1024, seed);
            return fold_mask(r.model);
        },
        py::arg("model"), py::arg("graph"), py::arg("scheme") = "full", py::arg("eta") = 0.5, py::arg("seed") = 0);

    mod.def(
        "infer",
        [](const GnnModel& model, const Graph& g) {
            NormalizedAdjacency adj = normalize(g, NormScheme::row_mean);
            return mat_to_numpy(full_inference(model, g, adj));
        },
        py::arg("model"), py::arg("graph"), "full-graph logits as a numpy array");

    mod.def(
        "infer_batched",
        [](const GnnModel& model, const Graph& g, const std::vector<std::uint32_t>& targets,
           std::int64_t cap_hop2, std::uint64_t seed) {
            NormalizedAdjacency adj = normalize(g, NormScheme::row_mean);
            BatchRequest req;
            req.targets = targets;
            req.neighbor_caps = {-1, cap_hop2};
            req.seed = seed;
            return mat_to_numpy(batched_inference(model, g, adj, req, nullptr));
        },
        py::arg("model"), py::arg("graph"), py::arg("targets"), py::arg("cap_hop2") = 32, py::arg("seed") = 0);

    mod.def(
        "evaluate_f1",
        [](const GnnModel& model, const Graph& g, const std::string& split) {
            NormalizedAdjacency adj = normalize(g, NormScheme::row_mean);
            Split s = split == "train" ? Split::train : split == "val" ? Split::val : Split::test;
            return evaluate_f1(model, g, adj, s);
        },
        py::arg("model"), py::arg("graph"), py::arg("split") = "test");

    mod.def(
        "estimate_macs_per_node",
        [](const GnnModel& model, const Graph& g) {
            DegreeStats ds = degree_stats(g);
            return full_cost(model_dims(model), g.num_nodes, ds.avg_degree).total_macs_per_node;
        },
        py::arg("model"), py::arg("graph"));
}
