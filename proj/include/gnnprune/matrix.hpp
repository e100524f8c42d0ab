#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "gnnprune/common.hpp"

namespace gnnprune {

/// Row-major dense matrix. Inference and pruning use Mat<float>
/// (deployment arithmetic); the trainer keeps Mat<double> internally.
template <typename T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}
    Mat(std::size_t r, std::size_t c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
        require(data.size() == rows * cols, "Mat: data length != rows*cols");
    }

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    template <typename U>
    Mat<U> cast() const {
        Mat<U> out(rows, cols);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    bool operator==(const Mat&) const = default;
};

using DenseMatrix = Mat<float>;

/// a*b with the k-loop innermost so the per-entry accumulation order is
/// fixed regardless of worker count.
template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
    require(a.cols == b.rows, "matmul: a.cols != b.rows");
    Mat<T> out(a.rows, b.cols);
    MacCounter::add(static_cast<std::uint64_t>(a.rows) * b.cols * a.cols);
    parallel_for(a.rows, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t j = 0; j < b.cols; ++j) {
                T acc = T(0);
                for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
                out(i, j) = acc;
            }
        }
    });
    return out;
}

/// Float product with 64-bit accumulation, for oracle comparisons.
inline DenseMatrix matmul_acc64(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols == b.rows, "matmul: a.cols != b.rows");
    DenseMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += static_cast<double>(a(i, k)) * b(k, j);
            out(i, j) = static_cast<float>(acc);
        }
    return out;
}

/// Columns appended in part order (branch order k=K'..K).
template <typename T>
Mat<T> hconcat(const std::vector<Mat<T>>& parts) {
    require(!parts.empty(), "hconcat: no parts");
    std::size_t rows = parts.front().rows;
    std::size_t cols = 0;
    for (const auto& p : parts) {
        require(p.rows == rows, "hconcat: row count mismatch");
        cols += p.cols;
    }
    Mat<T> out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            std::copy_n(p.data.data() + i * p.cols, p.cols, out.data.data() + i * cols + off);
            off += p.cols;
        }
    }
    return out;
}

/// out[:,j] = beta[j] * h[:,j].
template <typename T>
Mat<T> channel_scale(const Mat<T>& h, std::span<const T> beta) {
    require(beta.size() == h.cols, "channel_scale: beta length != cols");
    Mat<T> out(h.rows, h.cols);
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t j = 0; j < h.cols; ++j) out(i, j) = beta[j] * h(i, j);
    return out;
}

template <typename T>
Mat<T> relu(const Mat<T>& h) {
    Mat<T> out(h.rows, h.cols);
    for (std::size_t i = 0; i < h.data.size(); ++i) out.data[i] = std::max(T(0), h.data[i]);
    return out;
}

/// Mean of squared entrywise differences (per-entry normalization so
/// penalty factors are comparable across layer sizes).
template <typename T>
double frobenius_mse(const Mat<T>& a, const Mat<T>& b) {
    require(a.rows == b.rows && a.cols == b.cols, "frobenius_mse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        acc += d * d;
    }
    return a.data.empty() ? 0.0 : acc / static_cast<double>(a.data.size());
}

template <typename T>
double max_abs_diff(const Mat<T>& a, const Mat<T>& b) {
    require(a.rows == b.rows && a.cols == b.cols, "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return m;
}

} // namespace gnnprune
