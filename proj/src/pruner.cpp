#include "gnnprune/pruner.hpp"

#include <cmath>
#include <numeric>

#include "gnnprune/rng.hpp"

namespace gnnprune {

void PruneProblem::validate() const {
    require(!observations.empty(), "PruneProblem: no branches");
    require(observations.size() == targets.size() && observations.size() == weights.size(),
            "PruneProblem: branch count mismatch");
    for (std::size_t b = 0; b < observations.size(); ++b) {
        require(observations[b].rows == observations.front().rows, "PruneProblem: row count mismatch");
        require(observations[b].cols == observations.front().cols, "PruneProblem: channel count mismatch");
        require(targets[b].rows == observations[b].rows, "PruneProblem: target rows mismatch");
        require(weights[b].rows == observations[b].cols, "PruneProblem: weight rows != channels");
        require(weights[b].cols == targets[b].cols, "PruneProblem: weight cols != target cols");
    }
    require(batch_size >= 1, "PruneProblem: batch_size must be >= 1");
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::budget: return "budget";
        case StopReason::over_penalized: return "over_penalized";
        default: return "max_epochs";
    }
}

namespace {

/// Residuals of the masked predictor over a row range. For concat every
/// branch contributes its own residual block; for mean the branches are
/// averaged into a single block against the averaged target.
struct ResidualBlock {
    std::vector<Mat<double>> residuals; // per block
    std::uint64_t entries = 0;
};

ResidualBlock compute_residuals(const PruneProblem& p, const std::vector<float>& beta,
                                const std::vector<DenseMatrix>& weights, std::size_t row_lo, std::size_t row_hi) {
    std::size_t nb = p.observations.size();
    std::size_t rows = row_hi - row_lo;
    ResidualBlock rb;
    if (p.combiner == Combiner::concat || nb == 1) {
        for (std::size_t b = 0; b < nb; ++b) {
            const DenseMatrix& o = p.observations[b];
            const DenseMatrix& w = weights[b];
            const DenseMatrix& y = p.targets[b];
            Mat<double> r(rows, w.cols);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < w.cols; ++j) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < o.cols; ++c)
                        acc += static_cast<double>(o(row_lo + i, c)) * beta[c] * w(c, j);
                    r(i, j) = acc - y(row_lo + i, j);
                }
            rb.entries += r.data.size();
            rb.residuals.push_back(std::move(r));
        }
        return rb;
    }
    // mean combiner: single residual against the averaged target
    std::size_t out = p.targets.front().cols;
    Mat<double> r(rows, out);
    double inv = 1.0 / static_cast<double>(nb);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < out; ++j) {
            double acc = 0.0;
            double ybar = 0.0;
            for (std::size_t b = 0; b < nb; ++b) {
                const DenseMatrix& o = p.observations[b];
                const DenseMatrix& w = weights[b];
                for (std::size_t c = 0; c < o.cols; ++c)
                    acc += static_cast<double>(o(row_lo + i, c)) * beta[c] * w(c, j);
                ybar += p.targets[b](row_lo + i, j);
            }
            r(i, j) = (acc - ybar) * inv;
        }
    rb.entries = r.data.size();
    rb.residuals.push_back(std::move(r));
    return rb;
}

double data_loss(const PruneProblem& p, const std::vector<float>& beta, const std::vector<DenseMatrix>& weights) {
    ResidualBlock rb = compute_residuals(p, beta, weights, 0, p.rows());
    double acc = 0.0;
    for (const auto& r : rb.residuals)
        for (double v : r.data) acc += v * v;
    return rb.entries == 0 ? 0.0 : acc / static_cast<double>(rb.entries);
}

double l1_norm(const std::vector<float>& beta) {
    double s = 0.0;
    for (float v : beta) s += std::abs(v);
    return s;
}

} // namespace

double reconstruction_mse(const PruneProblem& p, const PruneMask& mask,
                          const std::vector<DenseMatrix>& weights) {
    return data_loss(p, mask.beta, weights);
}

double beta_epoch(const PruneProblem& p, std::vector<float>& beta, double lambda, double lr,
                  BetaAdamState& state) {
    p.validate();
    std::uint32_t c = p.channels();
    require(beta.size() == c, "beta_epoch: beta length != channels");
    if (state.m.empty()) {
        state.m.assign(c, 0.0);
        state.v.assign(c, 0.0);
    }

    std::uint64_t n = p.rows();
    std::size_t nb = p.observations.size();
    bool mean_comb = p.combiner == Combiner::mean && nb > 1;

    for (std::uint64_t start = 0; start < n; start += p.batch_size) {
        std::uint64_t stop = std::min<std::uint64_t>(n, start + p.batch_size);
        ResidualBlock rb = compute_residuals(p, beta, p.weights, start, stop);

        std::vector<double> grad(c, 0.0);
        double inv_entries = 2.0 / static_cast<double>(rb.entries);
        if (!mean_comb) {
            for (std::size_t b = 0; b < nb; ++b) {
                const DenseMatrix& o = p.observations[b];
                const DenseMatrix& w = p.weights[b];
                const Mat<double>& r = rb.residuals[b];
                // d/dbeta_c = 2/N * sum_r o[r,c] * (R W^T)[r,c]
                for (std::size_t i = 0; i < r.rows; ++i)
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        double rw = 0.0;
                        for (std::size_t j = 0; j < w.cols; ++j) rw += r(i, j) * w(ch, j);
                        grad[ch] += inv_entries * static_cast<double>(o(start + i, ch)) * rw;
                    }
            }
        } else {
            const Mat<double>& r = rb.residuals.front();
            double inv_b = 1.0 / static_cast<double>(nb);
            for (std::size_t b = 0; b < nb; ++b) {
                const DenseMatrix& o = p.observations[b];
                const DenseMatrix& w = p.weights[b];
                for (std::size_t i = 0; i < r.rows; ++i)
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        double rw = 0.0;
                        for (std::size_t j = 0; j < w.cols; ++j) rw += r(i, j) * w(ch, j);
                        grad[ch] += inv_entries * inv_b * static_cast<double>(o(start + i, ch)) * rw;
                    }
            }
        }
        // L1 subgradient; 0 at 0
        for (std::size_t ch = 0; ch < c; ++ch) {
            if (beta[ch] > 0.0f) grad[ch] += lambda;
            else if (beta[ch] < 0.0f) grad[ch] -= lambda;
        }

        state.t++;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
        double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
        for (std::size_t ch = 0; ch < c; ++ch) {
            state.m[ch] = b1 * state.m[ch] + (1.0 - b1) * grad[ch];
            state.v[ch] = b2 * state.v[ch] + (1.0 - b2) * grad[ch] * grad[ch];
            beta[ch] -= static_cast<float>(lr * (state.m[ch] / bc1) / (std::sqrt(state.v[ch] / bc2) + eps));
        }
    }

    double loss = data_loss(p, beta, p.weights) + lambda * l1_norm(beta);
    if (!std::isfinite(loss)) throw Error("beta_epoch: non-finite loss");
    return loss;
}

BetaPhaseResult run_beta_phase(const PruneProblem& p, const PruneBudget& budget, const PenaltySchedule& sched) {
    p.validate();
    budget.validate();
    sched.validate();

    std::uint32_t c = p.channels();
    std::uint32_t retained_target = budget.retained_count(c);
    std::uint32_t need_prunable = c - retained_target;

    BetaPhaseResult res;
    res.beta.assign(c, 1.0f);

    auto prunable_count = [&](const std::vector<float>& beta) {
        float mx = 0.0f;
        for (float v : beta) mx = std::max(mx, std::abs(v));
        std::uint32_t cnt = 0;
        for (float v : beta)
            if (std::abs(v) < 1e-3f * mx) cnt++;
        return cnt;
    };

    double lambda = sched.lambda0;
    if (lambda < 0.0) {
        // scale-free default: tie the penalty to the target signal energy
        double signal = 0.0;
        std::uint64_t n_entries = 0;
        for (const auto& y : p.targets) {
            for (float v : y.data) signal += static_cast<double>(v) * v;
            n_entries += y.data.size();
        }
        signal = n_entries ? signal / static_cast<double>(n_entries) : 0.0;
        lambda = 1e-4 * std::max(signal, 1e-12) / static_cast<double>(c);
    }

    if (prunable_count(res.beta) >= need_prunable) {
        res.stop_reason = StopReason::budget;
        res.final_lambda = lambda;
        return res;
    }

    BetaAdamState state;
    std::vector<float> prev_abs(c, 1.0f);
    std::uint32_t decreasing_streak = 0;
    for (std::uint32_t epoch = 0; epoch < sched.max_epochs; ++epoch) {
        beta_epoch(p, res.beta, lambda, sched.lr, state);
        res.epochs_run = epoch + 1;
        res.final_lambda = lambda;

        if (prunable_count(res.beta) >= need_prunable) {
            res.stop_reason = StopReason::budget;
            return res;
        }
        bool all_decreasing = true;
        for (std::size_t ch = 0; ch < c; ++ch) {
            float a = std::abs(res.beta[ch]);
            if (a >= prev_abs[ch]) all_decreasing = false;
            prev_abs[ch] = a;
        }
        decreasing_streak = all_decreasing ? decreasing_streak + 1 : 0;
        if (decreasing_streak >= sched.over_penalty_window) {
            res.stop_reason = StopReason::over_penalized;
            return res;
        }
        lambda *= sched.growth;
    }
    res.stop_reason = StopReason::max_epochs;
    return res;
}

PruneMask clip_mask(const std::vector<float>& beta, const PruneBudget& budget) {
    budget.validate();
    std::uint32_t c = static_cast<std::uint32_t>(beta.size());
    std::uint32_t keep = budget.retained_count(c);

    std::vector<std::uint32_t> order(c);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return std::abs(beta[a]) > std::abs(beta[b]); });

    PruneMask mask;
    mask.beta.assign(c, 0.0f);
    for (std::uint32_t i = 0; i < keep; ++i) mask.beta[order[i]] = beta[order[i]];
    // the retained >= 1 floor: if the top entry is exactly zero, keep index
    // order[0] at 1 so the channel survives folding
    bool any = false;
    for (float v : mask.beta) any = any || v != 0.0f;
    if (!any) mask.beta[order.front()] = 1.0f;
    mask.clipped = true;
    mask.retained = 0;
    for (float v : mask.beta)
        if (v != 0.0f) mask.retained++;
    mask.branch_scope = budget.branch_scope;
    return mask;
}

namespace {

/// Cholesky solve of (G + jitter I) W = B with multiple right-hand sides.
/// Returns false if the factorization hits a non-positive pivot.
bool cholesky_solve(Mat<double> g, Mat<double>& b) {
    std::size_t n = g.rows;
    for (std::size_t j = 0; j < n; ++j) {
        double d = g(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= g(j, k) * g(j, k);
        if (d <= 0.0 || !std::isfinite(d)) return false;
        g(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = g(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= g(i, k) * g(j, k);
            g(i, j) = s / g(j, j);
        }
    }
    // forward then backward substitution, per RHS column
    for (std::size_t col = 0; col < b.cols; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = b(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= g(i, k) * b(k, col);
            b(i, col) = s / g(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = b(i, col);
            for (std::size_t k = i + 1; k < n; ++k) s -= g(k, i) * b(k, col);
            b(i, col) = s / g(i, i);
        }
    }
    return true;
}

std::vector<std::uint32_t> mask_retained(const PruneMask& mask) {
    std::vector<std::uint32_t> kept;
    for (std::size_t j = 0; j < mask.beta.size(); ++j)
        if (mask.beta[j] != 0.0f) kept.push_back(static_cast<std::uint32_t>(j));
    return kept;
}

/// Masked observation block restricted to retained channels (beta folded in).
Mat<double> masked_obs(const DenseMatrix& o, const PruneMask& mask, const std::vector<std::uint32_t>& kept) {
    Mat<double> x(o.rows, kept.size());
    for (std::size_t i = 0; i < o.rows; ++i)
        for (std::size_t j = 0; j < kept.size(); ++j)
            x(i, j) = static_cast<double>(o(i, kept[j])) * mask.beta[kept[j]];
    return x;
}

std::vector<DenseMatrix> refit_closed_form(const PruneProblem& p, const PruneMask& mask) {
    std::vector<std::uint32_t> kept = mask_retained(mask);
    std::size_t r = kept.size();
    std::size_t nb = p.observations.size();
    std::vector<DenseMatrix> out;

    auto solve_or_throw = [&](Mat<double> gram, Mat<double>& rhs) {
        Mat<double> g0 = gram;
        if (!cholesky_solve(std::move(gram), rhs)) {
            for (std::size_t j = 0; j < g0.rows; ++j) g0(j, j) += 1e-8;
            if (!cholesky_solve(std::move(g0), rhs))
                throw Error("refit_weights: normal equations singular even with ridge jitter; use sgd mode");
        }
    };

    if (p.combiner == Combiner::concat || nb == 1) {
        for (std::size_t b = 0; b < nb; ++b) {
            Mat<double> x = masked_obs(p.observations[b], mask, kept);
            Mat<double> gram(r, r);
            for (std::size_t i = 0; i < x.rows; ++i)
                for (std::size_t a = 0; a < r; ++a) {
                    double xa = x(i, a);
                    if (xa == 0.0) continue;
                    for (std::size_t c2 = a; c2 < r; ++c2) gram(a, c2) += xa * x(i, c2);
                }
            for (std::size_t a = 0; a < r; ++a)
                for (std::size_t c2 = 0; c2 < a; ++c2) gram(a, c2) = gram(c2, a);
            const DenseMatrix& y = p.targets[b];
            Mat<double> rhs(r, y.cols);
            for (std::size_t i = 0; i < x.rows; ++i)
                for (std::size_t a = 0; a < r; ++a) {
                    double xa = x(i, a);
                    if (xa == 0.0) continue;
                    for (std::size_t j = 0; j < y.cols; ++j) rhs(a, j) += xa * y(i, j);
                }
            solve_or_throw(gram, rhs);
            DenseMatrix w(p.channels(), y.cols);
            for (std::size_t a = 0; a < r; ++a)
                for (std::size_t j = 0; j < y.cols; ++j) w(kept[a], j) = static_cast<float>(rhs(a, j));
            out.push_back(std::move(w));
        }
        return out;
    }

    // mean combiner: stack the branch observations horizontally (scaled by
    // 1/B) and solve one joint system
    std::size_t cols = r * nb;
    std::size_t y_cols = p.targets.front().cols;
    double inv_b = 1.0 / static_cast<double>(nb);
    Mat<double> x(p.rows(), cols);
    for (std::size_t b = 0; b < nb; ++b) {
        Mat<double> xb = masked_obs(p.observations[b], mask, kept);
        for (std::size_t i = 0; i < xb.rows; ++i)
            for (std::size_t j = 0; j < r; ++j) x(i, b * r + j) = xb(i, j) * inv_b;
    }
    Mat<double> ybar(p.rows(), y_cols);
    for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t i = 0; i < ybar.data.size(); ++i)
            ybar.data[i] += static_cast<double>(p.targets[b].data[i]) * inv_b;
    Mat<double> gram(cols, cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t a = 0; a < cols; ++a) {
            double xa = x(i, a);
            if (xa == 0.0) continue;
            for (std::size_t c2 = a; c2 < cols; ++c2) gram(a, c2) += xa * x(i, c2);
        }
    for (std::size_t a = 0; a < cols; ++a)
        for (std::size_t c2 = 0; c2 < a; ++c2) gram(a, c2) = gram(c2, a);
    Mat<double> rhs(cols, y_cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t a = 0; a < cols; ++a) {
            double xa = x(i, a);
            if (xa == 0.0) continue;
            for (std::size_t j = 0; j < y_cols; ++j) rhs(a, j) += xa * ybar(i, j);
        }
    solve_or_throw(gram, rhs);
    for (std::size_t b = 0; b < nb; ++b) {
        DenseMatrix w(p.channels(), y_cols);
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t j = 0; j < y_cols; ++j) w(kept[a], j) = static_cast<float>(rhs(b * r + a, j));
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<DenseMatrix> refit_sgd(const PruneProblem& p, const PruneMask& mask) {
    std::vector<std::uint32_t> kept = mask_retained(mask);
    std::size_t nb = p.observations.size();
    std::vector<DenseMatrix> w = p.weights;
    // zero the pruned rows up front; the gradient never touches them again
    for (auto& wb : w)
        for (std::size_t ch = 0; ch < wb.rows; ++ch)
            if (mask.beta[ch] == 0.0f)
                for (std::size_t j = 0; j < wb.cols; ++j) wb(ch, j) = 0.0f;

    std::vector<std::vector<double>> m(nb), v(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        m[b].assign(w[b].data.size(), 0.0);
        v[b].assign(w[b].data.size(), 0.0);
    }
    std::uint64_t t = 0;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 1e-2;
    double prev_loss = data_loss(p, mask.beta, w);
    bool mean_comb = p.combiner == Combiner::mean && nb > 1;

    for (std::uint32_t epoch = 0; epoch < 500; ++epoch) {
        for (std::uint64_t start = 0; start < p.rows(); start += p.batch_size) {
            std::uint64_t stop = std::min<std::uint64_t>(p.rows(), start + p.batch_size);
            ResidualBlock rb = compute_residuals(p, mask.beta, w, start, stop);
            double scale = 2.0 / static_cast<double>(rb.entries);
            t++;
            double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
            double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
            for (std::size_t b = 0; b < nb; ++b) {
                const Mat<double>& r = mean_comb ? rb.residuals.front() : rb.residuals[b];
                const DenseMatrix& o = p.observations[b];
                double factor = mean_comb ? scale / static_cast<double>(nb) : scale;
                for (std::size_t a = 0; a < kept.size(); ++a) {
                    std::uint32_t ch = kept[a];
                    double bval = mask.beta[ch];
                    for (std::size_t j = 0; j < w[b].cols; ++j) {
                        double gsum = 0.0;
                        for (std::size_t i = 0; i < r.rows; ++i)
                            gsum += static_cast<double>(o(start + i, ch)) * bval * r(i, j);
                        gsum *= factor;
                        std::size_t idx = ch * w[b].cols + j;
                        m[b][idx] = b1 * m[b][idx] + (1.0 - b1) * gsum;
                        v[b][idx] = b2 * v[b][idx] + (1.0 - b2) * gsum * gsum;
                        w[b].data[idx] -= static_cast<float>(lr * (m[b][idx] / bc1) /
                                                             (std::sqrt(v[b][idx] / bc2) + eps));
                    }
                }
            }
        }
        double loss = data_loss(p, mask.beta, w);
        if (!std::isfinite(loss)) throw Error("refit_weights: non-finite loss in sgd mode");
        if (std::abs(prev_loss - loss) < 1e-5 * std::max(prev_loss, 1e-12)) break;
        prev_loss = loss;
    }
    return w;
}

} // namespace

std::vector<DenseMatrix> refit_weights(const PruneProblem& p, const PruneMask& mask, RefitMode mode) {
    p.validate();
    require(mask.clipped, "refit_weights: mask must be clipped");
    require(mask.beta.size() == p.channels(), "refit_weights: mask length != channels");
    return mode == RefitMode::closed_form ? refit_closed_form(p, mask) : refit_sgd(p, mask);
}

PruneProblem collect_problem(const GnnModel& model, std::size_t layer_idx, const Graph& g_train,
                             const std::vector<PruneMask>& downstream_masks, std::uint32_t batch_size,
                             std::uint64_t seed) {
    require(layer_idx < model.layers.size(), "collect_problem: layer_idx out of range");
    require(g_train.num_nodes > 0, "collect_problem: empty training graph");
    NormalizedAdjacency adj = normalize(g_train, NormScheme::row_mean);

    // shallower layers are still unpruned at this point (reverse order)
    DenseMatrix h = g_train.attributes;
    for (std::size_t i = 0; i < layer_idx; ++i) h = layer_forward(model.layers[i], adj, h);

    const Layer& layer = model.layers[layer_idx];
    // output columns of this layer that survive downstream pruning
    std::vector<std::uint32_t> surviving;
    bool restrict_cols = false;
    if (layer_idx + 1 < model.layers.size() && layer_idx + 1 < downstream_masks.size()) {
        const PruneMask& next = downstream_masks[layer_idx + 1];
        if (!next.identity() && next.branch_scope < 0) {
            restrict_cols = true;
            for (std::size_t j = 0; j < next.beta.size(); ++j)
                if (next.beta[j] != 0.0f) surviving.push_back(static_cast<std::uint32_t>(j));
        }
    }

    PruneProblem p;
    p.combiner = layer.spec.combiner;
    p.batch_size = batch_size;
    p.seed = seed;

    std::size_t col_off = 0;
    DenseMatrix agg = h;
    for (int kk = 0; kk < layer.spec.k_min; ++kk) agg = spmm(adj, agg);
    for (int b = 0; b < layer.spec.num_branches(); ++b) {
        if (b > 0) agg = spmm(adj, agg);
        DenseMatrix obs = agg;
        if (!layer.branch_channels[b].empty()) {
            DenseMatrix sel(obs.rows, layer.branch_channels[b].size());
            for (std::size_t i = 0; i < obs.rows; ++i)
                for (std::size_t j = 0; j < layer.branch_channels[b].size(); ++j)
                    sel(i, j) = obs(i, layer.branch_channels[b][j]);
            obs = std::move(sel);
        }
        DenseMatrix w = layer.weights[b];
        if (restrict_cols) {
            std::vector<std::uint32_t> local;
            if (layer.spec.combiner == Combiner::mean) {
                local = surviving;
            } else {
                for (std::uint32_t col : surviving)
                    if (col >= col_off && col < col_off + layer.spec.out_dims[b])
                        local.push_back(col - static_cast<std::uint32_t>(col_off));
            }
            DenseMatrix wr(w.rows, local.size());
            for (std::size_t rr = 0; rr < w.rows; ++rr)
                for (std::size_t cc = 0; cc < local.size(); ++cc) wr(rr, cc) = w(rr, local[cc]);
            w = std::move(wr);
        }
        col_off += layer.spec.out_dims[b];
        p.targets.push_back(matmul(obs, w));
        p.observations.push_back(std::move(obs));
        p.weights.push_back(std::move(w));
    }
    p.validate();
    return p;
}

LayerPruneReport prune_layer(MaskedModel& model, std::size_t layer_idx, const PruneBudget& budget,
                             const PenaltySchedule& sched, const Graph& g_train, RefitMode refit,
                             std::uint32_t batch_size, std::uint64_t seed) {
    budget.validate();
    require(layer_idx < model.base.layers.size(), "prune_layer: layer_idx out of range");
    Layer& layer = model.base.layers[layer_idx];

    PruneProblem p = collect_problem(model.base, layer_idx, g_train, model.masks, batch_size, seed);
    int branch_b = -1;
    if (budget.branch_scope >= 0) {
        branch_b = budget.branch_scope - layer.spec.k_min;
        require(branch_b >= 0 && branch_b < layer.spec.num_branches(), "prune_layer: branch scope out of range");
        // single-branch problem
        PruneProblem pb;
        pb.combiner = Combiner::concat;
        pb.batch_size = p.batch_size;
        pb.seed = p.seed;
        pb.observations.push_back(p.observations[branch_b]);
        pb.targets.push_back(p.targets[branch_b]);
        pb.weights.push_back(p.weights[branch_b]);
        p = std::move(pb);
    }

    BetaPhaseResult phase = run_beta_phase(p, budget, sched);
    PruneMask mask = clip_mask(phase.beta, budget);

    LayerPruneReport report;
    report.layer_idx = static_cast<std::uint32_t>(layer_idx);
    report.channels = p.channels();
    report.retained = mask.retained;
    report.eta = budget.eta;
    report.final_lambda = phase.final_lambda;
    report.epochs_run = phase.epochs_run;
    report.stop_reason = phase.stop_reason;
    report.reconstruction_mse_before = reconstruction_mse(p, mask, p.weights);

    std::vector<DenseMatrix> refit_w = refit_weights(p, mask, refit);
    report.reconstruction_mse_after = reconstruction_mse(p, mask, refit_w);

    // install: scatter the refit values back into the original-width weight
    // matrices at the surviving output columns; pruned columns keep their
    // old values and are deleted at fold time
    auto install_branch = [&](int b, const DenseMatrix& w_new) {
        DenseMatrix& w = layer.weights[b];
        std::vector<std::uint32_t> surviving;
        if (layer_idx + 1 < model.base.layers.size()) {
            const PruneMask& next = model.masks[layer_idx + 1];
            if (!next.identity() && next.branch_scope < 0) {
                std::size_t col_off = 0;
                for (int bb = 0; bb < b; ++bb) col_off += layer.spec.out_dims[bb];
                for (std::size_t j = 0; j < next.beta.size(); ++j) {
                    if (next.beta[j] == 0.0f) continue;
                    if (layer.spec.combiner == Combiner::mean) surviving.push_back(static_cast<std::uint32_t>(j));
                    else if (j >= col_off && j < col_off + layer.spec.out_dims[b])
                        surviving.push_back(static_cast<std::uint32_t>(j - col_off));
                }
            }
        }
        if (surviving.empty() && w_new.cols == w.cols) {
            w = w_new;
        } else {
            for (std::size_t rr = 0; rr < w.rows; ++rr)
                for (std::size_t cc = 0; cc < surviving.size(); ++cc) w(rr, surviving[cc]) = w_new(rr, cc);
        }
    };

    if (branch_b >= 0) {
        install_branch(branch_b, refit_w.front());
    } else {
        for (int b = 0; b < layer.spec.num_branches(); ++b) install_branch(b, refit_w[b]);
    }
    model.masks[layer_idx] = mask;
    return report;
}

PruneResult prune_model(const GnnModel& model, const Graph& g_train, PruneScheme scheme, double eta,
                        const PenaltySchedule& sched, RefitMode refit, std::uint32_t batch_size,
                        std::uint64_t seed) {
    require(eta > 0.0 && eta <= 1.0, "prune_model: eta must be in (0,1]");
    std::size_t num_layers = model.layers.size();
    if (scheme == PruneScheme::batched)
        require(num_layers >= 2, "prune_model: batched scheme needs >= 2 layers");

    PruneResult result;
    result.model.base = model;
    result.model.masks.assign(num_layers, PruneMask{});

    // reverse order: output layer first
    for (std::size_t idx = num_layers; idx-- > 0;) {
        PruneBudget budget;
        if (scheme == PruneScheme::full) {
            // raw node attributes (the input of layer 0) are never pruned
            if (idx == 0) continue;
            budget.eta = eta;
        } else {
            if (idx == 1) {
                budget.eta = eta;
            } else if (idx == 0) {
                if (model.layers[0].spec.k_max < 1) continue;
                budget.eta = eta;
                budget.branch_scope = 1;
            } else {
                continue; // eta = 1, nothing to prune
            }
        }
        if (budget.eta >= 1.0) {
            // full budget: identity mask, nothing to remove
            continue;
        }
        result.reports.push_back(
            prune_layer(result.model, idx, budget, sched, g_train, refit, batch_size, seed));
    }
    std::reverse(result.reports.begin(), result.reports.end());
    return result;
}

PruneMask baseline_mask(const PruneProblem& p, const PruneBudget& budget, BaselineMethod method,
                        std::uint64_t seed) {
    p.validate();
    budget.validate();
    std::uint32_t c = p.channels();
    std::uint32_t keep = budget.retained_count(c);

    PruneMask mask;
    mask.beta.assign(c, 0.0f);
    mask.clipped = true;
    mask.branch_scope = budget.branch_scope;
    if (method == BaselineMethod::random) {
        Rng rng = Rng::substream(seed, "baseline/random");
        for (std::uint32_t ch : rng.sample_without_replacement(c, keep)) mask.beta[ch] = 1.0f;
    } else {
        std::vector<double> score(c, 0.0);
        for (const DenseMatrix& w : p.weights)
            for (std::uint32_t ch = 0; ch < c; ++ch)
                for (std::size_t j = 0; j < w.cols; ++j) score[ch] += std::abs(static_cast<double>(w(ch, j)));
        std::vector<std::uint32_t> order(c);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return score[a] > score[b]; });
        for (std::uint32_t i = 0; i < keep; ++i) mask.beta[order[i]] = 1.0f;
    }
    mask.retained = keep;
    return mask;
}

} // namespace gnnprune
