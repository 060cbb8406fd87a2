// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mext {

// Dense row-major double matrix. Sizes here are small (selection logits,
// MLP layers), so this is a plain container plus a few fused loops; no
// expression templates, no views.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double &operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    std::span<double> row(int r) { return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
    std::span<const double> row(int r) const {
        return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    bool same_shape(const Mat &o) const { return rows == o.rows && cols == o.cols; }
    void fill(double v) { a.assign(a.size(), v); }
};

// Complex counterpart, used for per-batch channel blocks.
struct CMat {
    int rows = 0;
    int cols = 0;
    std::vector<std::complex<double>> a;

    CMat() = default;
    CMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c)) {}

    std::complex<double> &operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    const std::complex<double> &operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    std::span<std::complex<double>> row(int r) {
        return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const std::complex<double>> row(int r) const {
        return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    bool same_shape(const CMat &o) const { return rows == o.rows && cols == o.cols; }
};

// 0/1 exclusion masks for the selection layer.
struct BoolMat {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> a;

    BoolMat() = default;
    BoolMat(int r, int c, bool fill = false)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill ? 1 : 0) {}

    std::uint8_t &operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    bool operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c] != 0; }
};

namespace detail {

inline void transpose_into(Mat &dst, const Mat &src) {
    dst.rows = src.cols;
    dst.cols = src.rows;
    dst.a.resize(src.a.size());
    for (int r = 0; r < src.rows; ++r)
        for (int c = 0; c < src.cols; ++c)
            dst.a[static_cast<std::size_t>(c) * src.rows + r] = src.a[static_cast<std::size_t>(r) * src.cols + c];
}

// C += A * B, all row-major. The k-inner axpy form keeps the innermost loop
// contiguous in both C and B so it vectorizes without reassociation flags.
inline void gemm_add(Mat &C, const Mat &A, const Mat &B) {
    assert(A.cols == B.rows && C.rows == A.rows && C.cols == B.cols);
    const int m = A.rows, p = A.cols, n = B.cols;
    for (int i = 0; i < m; ++i) {
        const double *ai = A.a.data() + static_cast<std::size_t>(i) * p;
        double *ci = C.a.data() + static_cast<std::size_t>(i) * n;
        for (int k = 0; k < p; ++k) {
            const double f = ai[k];
            const double *bk = B.a.data() + static_cast<std::size_t>(k) * n;
            for (int j = 0; j < n; ++j)
                ci[j] += f * bk[j];
        }
    }
}

} // namespace detail
} // namespace mext
