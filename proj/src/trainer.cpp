#include "gnnprune/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gnnprune/rng.hpp"

namespace gnnprune {

DModel to_dmodel(const GnnModel& m) {
    DModel dm;
    for (const Layer& l : m.layers) {
        dm.specs.push_back(l.spec);
        std::vector<Mat<double>> ws;
        for (const DenseMatrix& w : l.weights) ws.push_back(w.cast<double>());
        dm.weights.push_back(std::move(ws));
        dm.channels.push_back(l.branch_channels);
    }
    return dm;
}

GnnModel to_float_model(const DModel& dm) {
    GnnModel m;
    for (std::size_t i = 0; i < dm.specs.size(); ++i) {
        Layer l;
        l.spec = dm.specs[i];
        for (const auto& w : dm.weights[i]) l.weights.push_back(w.cast<float>());
        l.branch_channels = dm.channels[i];
        m.layers.push_back(std::move(l));
    }
    m.validate();
    return m;
}

namespace {

Mat<double> gather_cols_d(const Mat<double>& h, const std::vector<std::uint32_t>& cols) {
    if (cols.empty()) return h;
    Mat<double> out(h.rows, cols.size());
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = h(i, cols[j]);
    return out;
}

struct LayerTape {
    std::vector<Mat<double>> agg;   // per branch: A^k h (before gather)
    Mat<double> post;               // post-activation output
    Mat<double> pre;                // pre-activation output
};

/// Forward with aggregate-then-transform ordering (the tape stores the
/// aggregated inputs needed for dW).
Mat<double> forward_tape(const DModel& dm, const NormalizedAdjacency& adj, const Mat<double>& attrs,
                         std::vector<LayerTape>& tape) {
    Mat<double> h = attrs;
    tape.clear();
    tape.resize(dm.specs.size());
    for (std::size_t i = 0; i < dm.specs.size(); ++i) {
        const LayerSpec& spec = dm.specs[i];
        LayerTape& t = tape[i];
        std::vector<Mat<double>> parts;
        Mat<double> cur = h;
        for (int kk = 0; kk < spec.k_min; ++kk) cur = spmm(adj, cur);
        for (int b = 0; b < spec.num_branches(); ++b) {
            if (b > 0) cur = spmm(adj, cur);
            t.agg.push_back(cur);
            parts.push_back(matmul(gather_cols_d(cur, dm.channels[i][b]), dm.weights[i][b]));
        }
        Mat<double> out;
        if (spec.combiner == Combiner::concat) {
            out = hconcat(parts);
        } else {
            out = parts.front();
            for (std::size_t p = 1; p < parts.size(); ++p)
                for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += parts[p].data[j];
            double inv = 1.0 / static_cast<double>(parts.size());
            for (double& v : out.data) v *= inv;
        }
        t.pre = out;
        if (spec.activation == Activation::relu) out = relu(out);
        t.post = out;
        h = out;
    }
    return h;
}

double loss_and_logit_grad(const Mat<double>& logits, const Graph& g, LossKind loss, Mat<double>* grad) {
    std::size_t n = logits.rows;
    std::size_t c = logits.cols;
    if (grad) *grad = Mat<double>(n, c);
    double total = 0.0;
    if (loss == LossKind::softmax_ce) {
        for (std::size_t v = 0; v < n; ++v) {
            double mx = logits(v, 0);
            for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits(v, j));
            double z = 0.0;
            for (std::size_t j = 0; j < c; ++j) z += std::exp(logits(v, j) - mx);
            std::uint32_t y = g.labels_single[v];
            total += -(logits(v, y) - mx - std::log(z));
            if (grad)
                for (std::size_t j = 0; j < c; ++j) {
                    double p = std::exp(logits(v, j) - mx) / z;
                    (*grad)(v, j) = (p - (j == y ? 1.0 : 0.0)) / static_cast<double>(n);
                }
        }
        return total / static_cast<double>(n);
    }
    std::size_t entries = n * c;
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t j = 0; j < c; ++j) {
            double x = logits(v, j);
            double y = g.labels_multi[v * c + j] ? 1.0 : 0.0;
            // log(1+exp(x)) - y*x, stable form
            total += std::max(x, 0.0) - y * x + std::log1p(std::exp(-std::abs(x)));
            if (grad) (*grad)(v, j) = (1.0 / (1.0 + std::exp(-x)) - y) / static_cast<double>(entries);
        }
    return total / static_cast<double>(entries);
}

} // namespace

double loss_and_grad(const DModel& dm, const NormalizedAdjacency& adj, const Graph& g, LossKind loss,
                     std::vector<std::vector<Mat<double>>>* grads) {
    std::vector<LayerTape> tape;
    Mat<double> logits = forward_tape(dm, adj, g.attributes.cast<double>(), tape);
    Mat<double> glogit;
    double value = loss_and_logit_grad(logits, g, loss, grads ? &glogit : nullptr);
    if (!grads) return value;

    grads->assign(dm.weights.size(), {});
    NormalizedAdjacency adj_t = transpose(adj);

    Mat<double> gout = glogit;
    for (std::size_t ii = dm.specs.size(); ii-- > 0;) {
        const LayerSpec& spec = dm.specs[ii];
        const LayerTape& t = tape[ii];
        if (spec.activation == Activation::relu)
            for (std::size_t j = 0; j < gout.data.size(); ++j)
                if (t.pre.data[j] <= 0.0) gout.data[j] = 0.0;

        Mat<double> gin(t.agg.front().rows, spec.in_dim);
        std::vector<Mat<double>>& gw = (*grads)[ii];
        gw.resize(spec.num_branches());
        std::size_t off = 0;
        for (int b = 0; b < spec.num_branches(); ++b) {
            const std::vector<std::uint32_t>& sel = dm.channels[ii][b];
            std::size_t bw = spec.out_dims[b];
            // slice of the output gradient owned by this branch
            Mat<double> gb(gout.rows, bw);
            if (spec.combiner == Combiner::concat) {
                for (std::size_t r = 0; r < gout.rows; ++r)
                    for (std::size_t j = 0; j < bw; ++j) gb(r, j) = gout(r, off + j);
                off += bw;
            } else {
                double inv = 1.0 / static_cast<double>(spec.num_branches());
                for (std::size_t j = 0; j < gb.data.size(); ++j) gb.data[j] = gout.data[j] * inv;
            }
            Mat<double> x = gather_cols_d(t.agg[b], sel);
            // dW = x^T gb
            Mat<double>& dw = gw[b];
            dw = Mat<double>(x.cols, bw);
            for (std::size_t r = 0; r < x.rows; ++r)
                for (std::size_t ci = 0; ci < x.cols; ++ci) {
                    double xv = x(r, ci);
                    if (xv == 0.0) continue;
                    for (std::size_t j = 0; j < bw; ++j) dw(ci, j) += xv * gb(r, j);
                }
            // dX(selected) = gb W^T, scattered into full width, then pushed
            // through k transposed aggregations
            Mat<double> dxsel(gb.rows, x.cols);
            const Mat<double>& w = dm.weights[ii][b];
            for (std::size_t r = 0; r < gb.rows; ++r)
                for (std::size_t ci = 0; ci < x.cols; ++ci) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < bw; ++j) acc += gb(r, j) * w(ci, j);
                    dxsel(r, ci) = acc;
                }
            Mat<double> dx(gb.rows, spec.in_dim);
            if (sel.empty()) {
                dx = dxsel;
            } else {
                for (std::size_t r = 0; r < gb.rows; ++r)
                    for (std::size_t ci = 0; ci < sel.size(); ++ci) dx(r, sel[ci]) = dxsel(r, ci);
            }
            int k = spec.k_min + b;
            for (int kk = 0; kk < k; ++kk) dx = spmm(adj_t, dx);
            for (std::size_t j = 0; j < gin.data.size(); ++j) gin.data[j] += dx.data[j];
        }
        gout = std::move(gin);
    }
    return value;
}

namespace {

struct AdamState {
    std::vector<std::vector<Mat<double>>> m, v;
    std::uint64_t t = 0;
};

void apply_update(DModel& dm, const std::vector<std::vector<Mat<double>>>& grads, const TrainConfig& cfg,
                  AdamState& adam) {
    if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < dm.weights.size(); ++i)
            for (std::size_t b = 0; b < dm.weights[i].size(); ++b)
                for (std::size_t j = 0; j < dm.weights[i][b].data.size(); ++j)
                    dm.weights[i][b].data[j] -= cfg.learning_rate * grads[i][b].data[j];
        return;
    }
    if (adam.m.empty()) {
        adam.m.resize(dm.weights.size());
        adam.v.resize(dm.weights.size());
        for (std::size_t i = 0; i < dm.weights.size(); ++i)
            for (const auto& w : dm.weights[i]) {
                adam.m[i].emplace_back(w.rows, w.cols);
                adam.v[i].emplace_back(w.rows, w.cols);
            }
    }
    adam.t++;
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.t));
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.t));
    for (std::size_t i = 0; i < dm.weights.size(); ++i)
        for (std::size_t b = 0; b < dm.weights[i].size(); ++b)
            for (std::size_t j = 0; j < dm.weights[i][b].data.size(); ++j) {
                double gparam = grads[i][b].data[j];
                double& m = adam.m[i][b].data[j];
                double& v = adam.v[i][b].data[j];
                m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * gparam;
                v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * gparam * gparam;
                dm.weights[i][b].data[j] -=
                    cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
            }
}

DModel init_model(const std::vector<LayerSpec>& arch, std::uint64_t seed) {
    DModel dm;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        arch[i].validate();
        dm.specs.push_back(arch[i]);
        std::vector<Mat<double>> ws;
        for (int b = 0; b < arch[i].num_branches(); ++b) {
            Rng rng = Rng::substream(seed, "train/init/" + std::to_string(i) + "/" + std::to_string(b));
            Mat<double> w(arch[i].in_dim, arch[i].out_dims[b]);
            double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
            for (double& x : w.data) x = rng.uniform(-bound, bound);
            ws.push_back(std::move(w));
        }
        dm.weights.push_back(std::move(ws));
        dm.channels.emplace_back(arch[i].num_branches());
    }
    return dm;
}

TrainResult run_training(const Graph& g, DModel dm, const TrainConfig& cfg) {
    cfg.validate();
    TrainingGraph tg = training_graph(g);
    NormalizedAdjacency train_adj = normalize(tg.graph, NormScheme::row_mean);
    NormalizedAdjacency full_adj = normalize(g, NormScheme::row_mean);

    TrainResult result;
    DModel best = dm;
    double best_f1 = -1.0;
    std::uint32_t since_best = 0;
    AdamState adam;

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::vector<Mat<double>>> grads;
        double loss = loss_and_grad(dm, train_adj, tg.graph, cfg.loss, &grads);
        if (!std::isfinite(loss))
            throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        apply_update(dm, grads, cfg, adam);

        double val_f1 = evaluate_f1(to_float_model(dm), g, full_adj, Split::val);
        result.log.push_back({epoch, loss, val_f1, cfg.learning_rate});
        if (val_f1 > best_f1) {
            best_f1 = val_f1;
            best = dm;
            since_best = 0;
        } else if (++since_best >= cfg.early_stop_patience) {
            break;
        }
    }
    result.model = to_float_model(best_f1 >= 0 ? best : dm);
    result.best_val_f1 = std::max(best_f1, 0.0);
    return result;
}

} // namespace

TrainResult train(const Graph& g, const std::vector<LayerSpec>& arch, const TrainConfig& cfg) {
    require(!arch.empty(), "train: empty architecture");
    require(arch.front().in_dim == g.attr_dim(), "train: arch input width != attr_dim");
    std::uint32_t out_w = arch.back().out_width();
    require(out_w == g.num_classes, "train: arch output width != num_classes");
    return run_training(g, init_model(arch, cfg.seed), cfg);
}

TrainResult retrain(const Graph& g, const GnnModel& model, const TrainConfig& cfg) {
    require(model.in_dim() == g.attr_dim(), "retrain: model input width != attr_dim");
    return run_training(g, to_dmodel(model), cfg);
}

double f1_micro(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& truth) {
    require(pred.size() == truth.size(), "f1_micro: length mismatch");
    if (pred.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) correct++;
    // single-label micro F1 reduces to accuracy
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double f1_micro_multi(const DenseMatrix& logits, const std::vector<std::uint8_t>& truth_bits) {
    require(logits.data.size() == truth_bits.size(), "f1_micro_multi: size mismatch");
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        bool p = logits.data[i] > 0.0f; // sigmoid > 0.5
        bool t = truth_bits[i] != 0;
        if (p && t) tp++;
        else if (p) fp++;
        else if (t) fn++;
    }
    std::uint64_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double evaluate_f1(const GnnModel& model, const Graph& g, const NormalizedAdjacency& adj, Split split) {
    DenseMatrix logits = model_forward(model, adj, g.attributes);
    if (g.label_mode == LabelMode::single) {
        std::vector<std::uint32_t> pred, truth;
        for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
            if (g.split[v] != static_cast<std::uint8_t>(split)) continue;
            std::uint32_t arg = 0;
            for (std::uint32_t j = 1; j < g.num_classes; ++j)
                if (logits(v, j) > logits(v, arg)) arg = j;
            pred.push_back(arg);
            truth.push_back(g.labels_single[v]);
        }
        return pred.empty() ? 0.0 : f1_micro(pred, truth);
    }
    DenseMatrix sub(0, g.num_classes);
    std::vector<std::uint8_t> bits;
    std::vector<float> rowsbuf;
    for (std::uint64_t v = 0; v < g.num_nodes; ++v) {
        if (g.split[v] != static_cast<std::uint8_t>(split)) continue;
        for (std::uint32_t j = 0; j < g.num_classes; ++j) {
            rowsbuf.push_back(logits(v, j));
            bits.push_back(g.labels_multi[v * g.num_classes + j]);
        }
    }
    sub = DenseMatrix(rowsbuf.size() / g.num_classes, g.num_classes, std::move(rowsbuf));
    return f1_micro_multi(sub, bits);
}

void write_train_log_csv(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream out(path);
    out << "epoch,train_loss,val_f1,lr\n";
    for (const EpochLog& e : log)
        out << e.epoch << ',' << e.train_loss << ',' << e.val_f1 << ',' << e.lr << '\n';
}

} // namespace gnnprune
