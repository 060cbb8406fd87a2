// SPDX-License-Identifier: Apache-2.0
//
// Joint training of the antenna-selection logits and the extrapolation
// network: hard Gumbel-Max selection on the forward pass, softmax_tau
// straight-through gradients on the backward pass (same Gumbel draw), an
// entropy penalty on the selection probabilities, Adam with separate
// learning rates for logits and network, and a linear temperature schedule.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mext/dataset.hpp"
#include "mext/errors.hpp"
#include "mext/matrix.hpp"
#include "mext/mlp.hpp"
#include "mext/rng.hpp"
#include "mext/selection.hpp"
#include "mext/text.hpp"

namespace mext {

struct TrainConfig {
    int n_iter = 5000;
    int batch_size = 32;
    double eta_zeta = 5e-4;  // logits learning rate
    double eta_omega = 1e-4; // network learning rate
    double rho = 1e-8;       // entropy penalty multiplier
    double tau_start = 5.0;
    double tau_end = 0.5;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    double logit_beta = -2.73e-3; // quadratic coefficient of the logit init
    double logit_gamma_std = 0.1; // std of the logit init jitter
    int eval_every = 500;
};

// The default configuration keeps eta_zeta > eta_omega > 0; zero rates stay
// legal so either parameter group can be frozen.
inline void validate(const TrainConfig &c) {
    if (c.n_iter < 2)
        throw std::invalid_argument("train config: n_iter must be >= 2");
    if (c.batch_size < 1)
        throw std::invalid_argument("train config: batch_size must be >= 1");
    if (c.eta_zeta < 0.0 || c.eta_omega < 0.0)
        throw std::invalid_argument("train config: learning rates must be non-negative");
    if (c.rho < 0.0)
        throw std::invalid_argument("train config: rho must be non-negative");
    if (!(c.tau_end > 0.0) || c.tau_end > c.tau_start)
        throw std::invalid_argument("train config: need 0 < tau_end <= tau_start");
    if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0) || !(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0))
        throw std::invalid_argument("train config: adam betas must lie in [0, 1)");
    if (!(c.adam_eps > 0.0))
        throw std::invalid_argument("train config: adam_eps must be positive");
    if (c.logit_gamma_std < 0.0)
        throw std::invalid_argument("train config: logit_gamma_std must be non-negative");
    if (c.eval_every < 1)
        throw std::invalid_argument("train config: eval_every must be >= 1");
}

// Linear annealing tau_i = tau_start - (i-1)*dtau with
// dtau = (tau_start - tau_end)/(n_iter - 1); computed in lerp form so both
// endpoints are exact.
inline double temperature_at(int i, const TrainConfig &config) {
    if (i < 1 || i > config.n_iter)
        throw std::invalid_argument("temperature_at: iteration out of range");
    const double t = static_cast<double>(i - 1) / static_cast<double>(config.n_iter - 1);
    return std::lerp(config.tau_start, config.tau_end, t);
}

// First/second moment accumulators for one group of parameter arrays.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t t = 0;
};

inline AdamState make_adam_state(const std::vector<std::size_t> &sizes) {
    AdamState s;
    for (std::size_t n : sizes) {
        s.m.emplace_back(n, 0.0);
        s.v.emplace_back(n, 0.0);
    }
    return s;
}

// Bias-corrected Adam update applied in place across the parameter arrays.
inline void adam_step(AdamState &state, std::vector<std::span<double>> params,
                      std::vector<std::span<const double>> grads, double eta, const TrainConfig &config) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient group mismatch");
    state.t += 1;
    const double b1 = config.adam_beta1, b2 = config.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k];
        auto g = grads[k];
        auto &m = state.m[k];
        auto &v = state.v[k];
        if (p.size() != g.size() || p.size() != m.size())
            throw std::invalid_argument("adam_step: array size mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            p[i] -= eta * mhat / (std::sqrt(vhat) + config.adam_eps);
        }
    }
}

struct TrainedModel {
    int n = 0; // antennas
    int m = 0; // observed antennas
    SelectionLogits logits;
    NetworkParams network;
    TrainConfig config;
    std::vector<int> selected_indices; // 0-based, distinct
    double final_mse = std::numeric_limits<double>::quiet_NaN();
};

struct TraceRow {
    double total = 0.0;
    double mse = 0.0;
    double entropy = 0.0;
    double tau = 0.0;
};

struct EvalRecord {
    int iteration = 0;
    double mse = 0.0;
};

struct TrainResult {
    TrainedModel model;
    std::vector<TraceRow> trace;
    std::vector<EvalRecord> evals;
};

struct TrainOptions {
    // Freeze the selection to these 0-based antennas (the uniform baseline);
    // no Gumbel sampling, no logit updates, no entropy term in the loss.
    std::optional<std::vector<int>> fixed_indices;
    // When set, evaluated every config.eval_every iterations and at the end;
    // the final value becomes model.final_mse.
    const Dataset *eval_set = nullptr;
    // One log line every config.eval_every iterations when set.
    std::ostream *log = nullptr;
};

namespace detail {

inline std::vector<std::span<double>> param_views(NetworkParams &net) {
    std::vector<std::span<double>> out;
    for (auto &l : net.layers) {
        out.emplace_back(l.w.a);
        out.emplace_back(l.b);
    }
    return out;
}

inline std::vector<std::span<const double>> grad_views(const NetworkGrads &g) {
    std::vector<std::span<const double>> out;
    for (const auto &l : g.layers) {
        out.emplace_back(l.w.a);
        out.emplace_back(l.b);
    }
    return out;
}

inline std::vector<std::size_t> param_sizes(const NetworkParams &net) {
    std::vector<std::size_t> out;
    for (const auto &l : net.layers) {
        out.push_back(l.w.a.size());
        out.push_back(l.b.size());
    }
    return out;
}

// Uniform-without-replacement batches from a seeded shuffle; reshuffles when
// fewer than a full batch remains.
struct BatchStream {
    std::vector<std::int64_t> order;
    std::size_t cursor = 0;
    std::mt19937_64 rng;

    BatchStream(std::int64_t num, std::mt19937_64 r) : order(num), rng(std::move(r)) {
        for (std::int64_t i = 0; i < num; ++i)
            order[static_cast<std::size_t>(i)] = i;
        std::shuffle(order.begin(), order.end(), rng);
    }

    void next(std::size_t batch, std::vector<std::int64_t> &out) {
        if (cursor + batch > order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        out.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                   order.begin() + static_cast<std::ptrdiff_t>(cursor + batch));
        cursor += batch;
    }
};

inline double evaluate_indices(const std::vector<int> &indices, const NetworkParams &net, const Dataset &ds) {
    const std::int64_t num = ds.num_samples();
    if (num < 1)
        throw std::invalid_argument("evaluate: empty dataset");
    const int m = static_cast<int>(indices.size());
    Mat x(static_cast<int>(num), 2 * m);
    for (std::int64_t i = 0; i < num; ++i) {
        const auto h = ds.up(i);
        auto row = x.row(static_cast<int>(i));
        for (int k = 0; k < m; ++k) {
            row[static_cast<std::size_t>(k)] = h[indices[static_cast<std::size_t>(k)]].real();
            row[static_cast<std::size_t>(m + k)] = h[indices[static_cast<std::size_t>(k)]].imag();
        }
    }
    auto [y, cache] = forward_batch(net, x);
    const int n = ds.n;
    double acc = 0.0;
    for (std::int64_t i = 0; i < num; ++i) {
        const auto yr = y.row(static_cast<int>(i));
        const auto t = ds.down(i);
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            const double dre = yr[static_cast<std::size_t>(k)] - t[static_cast<std::size_t>(k)].real();
            const double dim = yr[static_cast<std::size_t>(n + k)] - t[static_cast<std::size_t>(k)].imag();
            s += dre * dre + dim * dim;
        }
        acc += s / n;
    }
    return acc / static_cast<double>(num);
}

} // namespace detail

// Test MSE with the model's evaluation-time selection (noise-free argmax
// indices for trained selections, the frozen indices for baselines); no
// Gumbel noise, no entropy term.
inline double evaluate(const TrainedModel &model, const Dataset &test_set) {
    if (test_set.num_samples() < 1)
        throw std::invalid_argument("evaluate: empty test set");
    if (test_set.n != model.n)
        throw std::invalid_argument("evaluate: dataset antenna count does not match model");
    return detail::evaluate_indices(model.selected_indices, model.network, test_set);
}

// One full run of the joint learning loop. layer_specs must map 2M real
// inputs to 2N real outputs for the dataset's N.
inline TrainResult train(const Dataset &dataset, const TrainConfig &config, const std::vector<LayerSpec> &layer_specs,
                         const TrainOptions &options = {}) {
    validate(config);
    validate(layer_specs);
    if (dataset.num_samples() < 1)
        throw std::invalid_argument("train: empty dataset");
    const int n = dataset.n;
    if (layer_specs.front().in_dim % 2 != 0)
        throw std::invalid_argument("train: network input dimension must be even (stacked Re/Im)");
    const int m = layer_specs.front().in_dim / 2;
    if (m >= n)
        throw std::invalid_argument("train: M must be smaller than the antenna count N");
    if (layer_specs.back().out_dim != 2 * n)
        throw std::invalid_argument("train: network output dimension must be 2*N for the dataset");
    if (options.fixed_indices) {
        const auto &fi = *options.fixed_indices;
        if (static_cast<int>(fi.size()) != m)
            throw std::invalid_argument("train: fixed_indices size must equal M");
        std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
        for (int idx : fi) {
            if (idx < 0 || idx >= n || seen[static_cast<std::size_t>(idx)])
                throw std::invalid_argument("train: fixed_indices must be distinct antennas in [0, N)");
            seen[static_cast<std::size_t>(idx)] = 1;
        }
    }

    const bool learn_selection = !options.fixed_indices.has_value();
    auto logit_rng = make_rng(config.seed, stream::kLogitInit);
    auto net_rng = make_rng(config.seed, stream::kNetInit);
    auto gumbel_rng = make_rng(config.seed, stream::kGumbel);

    SelectionLogits logits = init_logits(m, n, config.logit_beta, config.logit_gamma_std, logit_rng);
    NetworkParams net = init_network(layer_specs, net_rng);

    AdamState adam_net = make_adam_state(detail::param_sizes(net));
    AdamState adam_logits = make_adam_state({logits.values.a.size()});

    const std::int64_t num = dataset.num_samples();
    const std::size_t batch = static_cast<std::size_t>(std::min<std::int64_t>(config.batch_size, num));
    detail::BatchStream batches(num, make_rng(config.seed, stream::kBatch));

    SelectionMatrix fixed_sel;
    if (!learn_selection) {
        fixed_sel.indices = *options.fixed_indices;
        fixed_sel.n = n;
    }

    TrainResult result;
    result.trace.reserve(static_cast<std::size_t>(config.n_iter));

    std::vector<std::int64_t> batch_idx;
    std::vector<GumbelNoise> noises(batch);
    std::vector<SelectionMatrix> sels(batch);
    std::vector<BoolMat> masks(batch);

    auto current_indices = [&]() {
        return learn_selection ? deterministic_indices(logits) : fixed_sel.indices;
    };

    for (int iter = 1; iter <= config.n_iter; ++iter) {
        const double tau = temperature_at(iter, config);
        if (learn_selection)
            for (double v : logits.values.a)
                if (!std::isfinite(v))
                    throw numeric_error("non-finite selection logits entering iteration " + std::to_string(iter) +
                                        " (tau=" + fmt_double(tau) + ")");
        batches.next(batch, batch_idx);

        // Forward: per-sample hard selection, one shared batched network pass.
        Mat x(static_cast<int>(batch), 2 * m);
        CMat targets(static_cast<int>(batch), n);
        for (std::size_t s = 0; s < batch; ++s) {
            const std::int64_t idx = batch_idx[s];
            if (learn_selection) {
                noises[s] = sample_gumbel(m, n, gumbel_rng);
                sels[s] = hard_select(logits, noises[s]);
                masks[s] = exclusion_mask(sels[s]);
            }
            const SelectionMatrix &sel = learn_selection ? sels[s] : fixed_sel;
            const auto h = dataset.up(idx);
            auto row = x.row(static_cast<int>(s));
            for (int k = 0; k < m; ++k) {
                row[static_cast<std::size_t>(k)] = h[sel.indices[static_cast<std::size_t>(k)]].real();
                row[static_cast<std::size_t>(m + k)] = h[sel.indices[static_cast<std::size_t>(k)]].imag();
            }
            std::copy(dataset.down(idx).begin(), dataset.down(idx).end(), targets.row(static_cast<int>(s)).begin());
        }
        auto [y, cache] = forward_batch(net, x);

        CMat pred(static_cast<int>(batch), n);
        for (std::size_t s = 0; s < batch; ++s) {
            const auto yr = y.row(static_cast<int>(s));
            auto pr = pred.row(static_cast<int>(s));
            for (int k = 0; k < n; ++k)
                pr[static_cast<std::size_t>(k)] = {yr[static_cast<std::size_t>(k)], yr[static_cast<std::size_t>(n + k)]};
        }
        auto [mse, grad_pred] = mse_loss(pred, targets);

        Mat probs;
        double entropy = 0.0;
        if (learn_selection) {
            probs = class_probabilities(logits);
            entropy = entropy_penalty(probs);
        }
        const double total = mse + (learn_selection ? config.rho * entropy : 0.0);
        if (!std::isfinite(total)) {
            std::string msg = "non-finite loss at iteration " + std::to_string(iter) + ": total=" + fmt_double(total) +
                              " mse=" + fmt_double(mse) + " entropy=" + fmt_double(entropy) +
                              " tau=" + fmt_double(tau) + " batch=[";
            for (std::size_t s = 0; s < batch_idx.size(); ++s)
                msg += (s ? "," : "") + std::to_string(batch_idx[s]);
            msg += "]";
            throw numeric_error(msg);
        }
        result.trace.push_back({total, mse, entropy, tau});

        // Backward through the network.
        Mat gy(static_cast<int>(batch), 2 * n);
        for (std::size_t s = 0; s < batch; ++s) {
            const auto gp = grad_pred.row(static_cast<int>(s));
            auto gr = gy.row(static_cast<int>(s));
            for (int k = 0; k < n; ++k) {
                gr[static_cast<std::size_t>(k)] = gp[static_cast<std::size_t>(k)].real();
                gr[static_cast<std::size_t>(n + k)] = gp[static_cast<std::size_t>(k)].imag();
            }
        }
        auto [net_grads, gx] = backward_batch(net, cache, gy);

        // Straight-through gradient into the logits. The gradient that
        // reaches row s_m expands dLoss/dh_tilde_m over the antennas of the
        // full uplink vector (h_tilde = S h), real and imaginary parts both
        // contributing.
        if (learn_selection) {
            Mat grad_logits(m, n, 0.0);
            Mat grad_s(m, n);
            for (std::size_t s = 0; s < batch; ++s) {
                const auto h = dataset.up(batch_idx[s]);
                const auto gr = gx.row(static_cast<int>(s));
                for (int r = 0; r < m; ++r) {
                    const double g_re = gr[static_cast<std::size_t>(r)];
                    const double g_im = gr[static_cast<std::size_t>(m + r)];
                    for (int c = 0; c < n; ++c)
                        grad_s(r, c) = g_re * h[static_cast<std::size_t>(c)].real() +
                                       g_im * h[static_cast<std::size_t>(c)].imag();
                }
                const Mat gz = selection_backward(grad_s, logits, noises[s], tau, masks[s]);
                for (std::size_t k = 0; k < gz.a.size(); ++k)
                    grad_logits.a[k] += gz.a[k];
            }
            if (config.rho != 0.0) {
                const Mat ent_grad = entropy_penalty_logit_grad(probs);
                for (std::size_t k = 0; k < ent_grad.a.size(); ++k)
                    grad_logits.a[k] += config.rho * ent_grad.a[k];
            }
            adam_step(adam_logits, {std::span<double>(logits.values.a)}, {std::span<const double>(grad_logits.a)},
                      config.eta_zeta, config);
        }
        adam_step(adam_net, detail::param_views(net), detail::grad_views(net_grads), config.eta_omega, config);

        if (options.eval_set && (iter % config.eval_every == 0 || iter == config.n_iter))
            result.evals.push_back({iter, detail::evaluate_indices(current_indices(), net, *options.eval_set)});
        if (options.log && (iter % config.eval_every == 0 || iter == config.n_iter)) {
            *options.log << "iter=" << iter << " loss=" << fmt_double(total) << " tau=" << fmt_double(tau);
            if (!result.evals.empty() && result.evals.back().iteration == iter)
                *options.log << " eval_mse=" << fmt_double(result.evals.back().mse);
            *options.log << "\n";
        }
    }

    result.model.n = n;
    result.model.m = m;
    result.model.selected_indices = current_indices();
    result.model.logits = std::move(logits);
    result.model.network = std::move(net);
    result.model.config = config;
    if (!result.evals.empty())
        result.model.final_mse = result.evals.back().mse;
    return result;
}

} // namespace mext
