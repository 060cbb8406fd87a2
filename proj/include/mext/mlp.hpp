// SPDX-License-Identifier: Apache-2.0
//
// Fully-connected extrapolation network with explicit forward and backward
// passes. Channel vectors enter and leave as stacked [Re; Im] real vectors.
// The batch variants are the training hot path; the single-vector forms are
// thin wrappers with the same math.
#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mext/matrix.hpp"

namespace mext {

enum class Activation { ReLU, Linear };

inline std::string to_string(Activation a) { return a == Activation::ReLU ? "relu" : "linear"; }

inline Activation activation_from_string(const std::string &s) {
    if (s == "relu")
        return Activation::ReLU;
    if (s == "linear")
        return Activation::Linear;
    throw std::invalid_argument("unknown activation: '" + s + "'");
}

struct LayerSpec {
    int in_dim = 0;
    int out_dim = 0;
    Activation activation = Activation::ReLU;
};

// Hidden layers ReLU, output layer Linear (channel coefficients are signed).
inline std::vector<LayerSpec> make_layer_specs(int input_dim, const std::vector<int> &hidden, int output_dim) {
    std::vector<LayerSpec> specs;
    int in = input_dim;
    for (int h : hidden) {
        specs.push_back({in, h, Activation::ReLU});
        in = h;
    }
    specs.push_back({in, output_dim, Activation::Linear});
    return specs;
}

struct NetworkParams {
    struct Layer {
        Mat w; // out_dim x in_dim
        std::vector<double> b;
        Activation activation = Activation::ReLU;
    };
    std::vector<Layer> layers;

    int in_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
    int out_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }

    std::vector<LayerSpec> specs() const {
        std::vector<LayerSpec> out;
        for (const auto &l : layers)
            out.push_back({l.w.cols, l.w.rows, l.activation});
        return out;
    }
};

// Per-layer inputs and pre-activations retained for the backward pass.
struct ForwardCache {
    std::vector<Mat> inputs; // inputs[l]: batch x in_dim(l)
    std::vector<Mat> pre;    // pre[l]:    batch x out_dim(l)
};

inline void validate(const std::vector<LayerSpec> &specs) {
    if (specs.empty())
        throw std::invalid_argument("network: need at least one layer");
    for (const auto &s : specs)
        if (s.in_dim < 1 || s.out_dim < 1)
            throw std::invalid_argument("network: layer dimensions must be positive");
    for (std::size_t l = 1; l < specs.size(); ++l)
        if (specs[l].in_dim != specs[l - 1].out_dim)
            throw std::invalid_argument("network: layer dimensions do not chain");
}

// x = [Re(h)^T, Im(h)^T]^T.
inline std::vector<double> complex_to_real(std::span<const std::complex<double>> h) {
    std::vector<double> x(2 * h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        x[i] = h[i].real();
        x[h.size() + i] = h[i].imag();
    }
    return x;
}

inline std::vector<std::complex<double>> real_to_complex(std::span<const double> x) {
    if (x.size() % 2 != 0)
        throw std::invalid_argument("real_to_complex: input length must be even");
    const std::size_t n = x.size() / 2;
    std::vector<std::complex<double>> h(n);
    for (std::size_t i = 0; i < n; ++i)
        h[i] = {x[i], x[n + i]};
    return h;
}

// He-normal weights (variance 2/in_dim), zero biases. Row-major draw order.
inline NetworkParams init_network(const std::vector<LayerSpec> &specs, std::mt19937_64 &rng) {
    validate(specs);
    NetworkParams net;
    for (const auto &s : specs) {
        NetworkParams::Layer layer;
        layer.activation = s.activation;
        layer.w = Mat(s.out_dim, s.in_dim);
        layer.b.assign(s.out_dim, 0.0);
        std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / s.in_dim));
        for (double &v : layer.w.a)
            v = gauss(rng);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

// Batched forward: X is batch x in_dim, returns batch x out_dim plus the
// cache needed by backward_batch.
inline std::pair<Mat, ForwardCache> forward_batch(const NetworkParams &params, const Mat &x) {
    if (params.layers.empty())
        throw std::invalid_argument("forward: empty network");
    if (x.cols != params.in_dim())
        throw std::invalid_argument("forward: input width " + std::to_string(x.cols) + " does not match network input " +
                                    std::to_string(params.in_dim()));
    ForwardCache cache;
    cache.inputs.reserve(params.layers.size());
    cache.pre.reserve(params.layers.size());
    Mat cur = x;
    Mat wt;
    for (const auto &layer : params.layers) {
        cache.inputs.push_back(cur);
        Mat pre(cur.rows, layer.w.rows);
        for (int i = 0; i < pre.rows; ++i)
            for (int j = 0; j < pre.cols; ++j)
                pre(i, j) = layer.b[j];
        detail::transpose_into(wt, layer.w);
        detail::gemm_add(pre, cur, wt);
        cache.pre.push_back(pre);
        if (layer.activation == Activation::ReLU) {
            for (double &v : pre.a)
                v = v > 0.0 ? v : 0.0;
        }
        cur = std::move(pre);
    }
    return {std::move(cur), std::move(cache)};
}

inline std::pair<std::vector<double>, ForwardCache> forward(const NetworkParams &params,
                                                            std::span<const double> x) {
    Mat xb(1, static_cast<int>(x.size()));
    std::copy(x.begin(), x.end(), xb.a.begin());
    auto [y, cache] = forward_batch(params, xb);
    return {std::move(y.a), std::move(cache)};
}

// Gradients shaped like the parameters (activation tags are carried along
// but ignored).
using NetworkGrads = NetworkParams;

namespace detail {

inline void check_cache(const NetworkParams &params, const ForwardCache &cache, const Mat &grad_y) {
    if (cache.inputs.size() != params.layers.size() || cache.pre.size() != params.layers.size())
        throw std::logic_error("backward: cache does not match network layer count");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        if (cache.inputs[l].cols != params.layers[l].w.cols || cache.pre[l].cols != params.layers[l].w.rows ||
            cache.inputs[l].rows != cache.pre[l].rows)
            throw std::logic_error("backward: cache shapes are stale or mismatched");
    }
    if (grad_y.cols != params.out_dim() || grad_y.rows != cache.pre.back().rows)
        throw std::invalid_argument("backward: output gradient shape mismatch");
}

} // namespace detail

// Batched backprop. ReLU subgradient at 0 is 0. Returns parameter gradients
// summed over the batch and the gradient w.r.t. the input block.
inline std::pair<NetworkGrads, Mat> backward_batch(const NetworkParams &params, const ForwardCache &cache,
                                                   const Mat &grad_y) {
    detail::check_cache(params, cache, grad_y);
    NetworkGrads grads;
    grads.layers.resize(params.layers.size());
    Mat g = grad_y;
    Mat scratch;
    for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
        const auto &layer = params.layers[static_cast<std::size_t>(l)];
        auto &gl = grads.layers[static_cast<std::size_t>(l)];
        gl.activation = layer.activation;
        if (layer.activation == Activation::ReLU) {
            const Mat &pre = cache.pre[static_cast<std::size_t>(l)];
            for (std::size_t i = 0; i < g.a.size(); ++i)
                if (!(pre.a[i] > 0.0))
                    g.a[i] = 0.0;
        }
        gl.w = Mat(layer.w.rows, layer.w.cols, 0.0);
        gl.b.assign(layer.b.size(), 0.0);
        // db = column sums of g; dW = g^T * input.
        for (int i = 0; i < g.rows; ++i) {
            const auto gi = g.row(i);
            for (int j = 0; j < g.cols; ++j)
                gl.b[static_cast<std::size_t>(j)] += gi[j];
        }
        detail::transpose_into(scratch, g);
        detail::gemm_add(gl.w, scratch, cache.inputs[static_cast<std::size_t>(l)]);
        // grad w.r.t. this layer's input: g * W.
        Mat gx(g.rows, layer.w.cols, 0.0);
        detail::gemm_add(gx, g, layer.w);
        g = std::move(gx);
    }
    return {std::move(grads), std::move(g)};
}

inline std::pair<NetworkGrads, std::vector<double>> backward(const NetworkParams &params, const ForwardCache &cache,
                                                             std::span<const double> grad_y) {
    Mat gy(1, static_cast<int>(grad_y.size()));
    std::copy(grad_y.begin(), grad_y.end(), gy.a.begin());
    auto [grads, gx] = backward_batch(params, cache, gy);
    return {std::move(grads), std::move(gx.a)};
}

// Channel-estimation MSE over a batch:
//   loss = 1/(N*B) * sum_mu || target_mu - pred_mu ||_2^2,
// gradient w.r.t. the prediction = 2*(pred - target)/(N*B).
inline std::pair<double, CMat> mse_loss(const CMat &predicted, const CMat &target) {
    if (!predicted.same_shape(target))
        throw std::invalid_argument("mse_loss: shape mismatch");
    if (predicted.rows < 1 || predicted.cols < 1)
        throw std::invalid_argument("mse_loss: empty batch");
    const double scale = 1.0 / (static_cast<double>(predicted.cols) * static_cast<double>(predicted.rows));
    double loss = 0.0;
    CMat grad(predicted.rows, predicted.cols);
    for (std::size_t i = 0; i < predicted.a.size(); ++i) {
        const std::complex<double> d = predicted.a[i] - target.a[i];
        loss += std::norm(d);
        grad.a[i] = 2.0 * scale * d;
    }
    return {loss * scale, std::move(grad)};
}

} // namespace mext
