// SPDX-License-Identifier: Apache-2.0
//
// Trainable probabilistic antenna selection. An M x N logits matrix induces
// one categorical distribution per output row; hard samples come from the
// Gumbel-Max trick with dynamic exclusion of already-chosen antennas, and
// gradients flow through the temperature-controlled softmax relaxation
// (hard forward, soft backward with the same Gumbel draw).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "mext/channel.hpp"
#include "mext/matrix.hpp"
#include "mext/rng.hpp"

namespace mext {

// Unnormalized log-probabilities zeta_{m,n}; row m parameterizes which
// antenna feeds output m.
struct SelectionLogits {
    Mat values; // M x N

    int m() const { return values.rows; }
    int n() const { return values.cols; }
};

// Hard selection: one antenna index per row, pairwise distinct.
struct SelectionMatrix {
    std::vector<int> indices; // 0-based antenna per row
    int n = 0;                // antenna count

    int m() const { return static_cast<int>(indices.size()); }

    // Dense one-hot rows, for oracle-style checks against S * h.
    Mat dense() const {
        Mat s(m(), n, 0.0);
        for (int r = 0; r < m(); ++r)
            s(r, indices[r]) = 1.0;
        return s;
    }
};

struct GumbelNoise {
    Mat values; // M x N, i.i.d. Gumbel(0,1)
};

struct SoftSelection {
    Mat rows; // M x N, rows sum to 1, excluded entries exactly 0
    double temperature = 0.0;
};

// Order-preserving initialization: zeta_{m,n} = beta*(n - (N/M)*m)^2 + gamma,
// with the quadratic evaluated on 1-based row/column numbers. beta < 0 puts
// each row's probability peak near antenna (N/M)*m.
inline SelectionLogits init_logits(int m, int n, double beta, double gamma_std, std::mt19937_64 &rng) {
    if (m < 1 || m >= n)
        throw std::invalid_argument("init_logits: need 1 <= M < N");
    if (gamma_std < 0.0)
        throw std::invalid_argument("init_logits: gamma_std must be non-negative");
    SelectionLogits z;
    z.values = Mat(m, n);
    std::normal_distribution<double> gauss(0.0, gamma_std);
    const double step = static_cast<double>(n) / static_cast<double>(m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) {
            const double d = (c + 1) - step * (r + 1);
            const double gamma = gamma_std > 0.0 ? gauss(rng) : 0.0;
            z.values(r, c) = beta * d * d + gamma;
        }
    return z;
}

// Row-wise softmax of the logits (max-subtracted): pi_{m,n} per row.
inline Mat class_probabilities(const SelectionLogits &logits) {
    Mat p(logits.m(), logits.n());
    for (int r = 0; r < logits.m(); ++r) {
        const auto row = logits.values.row(r);
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : row)
            mx = std::max(mx, v);
        double sum = 0.0;
        for (int c = 0; c < logits.n(); ++c) {
            const double e = std::exp(row[c] - mx);
            p(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < logits.n(); ++c)
            p(r, c) /= sum;
    }
    return p;
}

inline GumbelNoise sample_gumbel(int m, int n, std::mt19937_64 &rng) {
    if (m < 1 || n < 1)
        throw std::invalid_argument("sample_gumbel: dimensions must be positive");
    GumbelNoise g;
    g.values = Mat(m, n);
    for (double &v : g.values.a)
        v = draw_gumbel(rng);
    return g;
}

// Gumbel-Max with dynamic exclusion: rows are processed in order; row m takes
// argmax_n (g_{m,n} + zeta_{m,n}) over antennas not chosen by earlier rows,
// so the M indices come out pairwise distinct.
inline SelectionMatrix hard_select(const SelectionLogits &logits, const GumbelNoise &noise) {
    if (!logits.values.same_shape(noise.values))
        throw std::invalid_argument("hard_select: logits and noise shapes disagree");
    const int m = logits.m(), n = logits.n();
    if (m > n)
        throw std::invalid_argument("hard_select: more rows than antennas");
    SelectionMatrix sel;
    sel.n = n;
    sel.indices.reserve(m);
    std::vector<std::uint8_t> taken(n, 0);
    for (int r = 0; r < m; ++r) {
        int best = -1;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < n; ++c) {
            if (taken[c])
                continue;
            const double v = logits.values(r, c) + noise.values(r, c);
            if (best < 0 || v > best_v) {
                best_v = v;
                best = c;
            }
        }
        if (!std::isfinite(best_v))
            throw std::invalid_argument("hard_select: row " + std::to_string(r) + " has no finite candidate");
        taken[best] = 1;
        sel.indices.push_back(best);
    }
    return sel;
}

// Row m of the mask marks the antennas already consumed by rows 0..m-1, i.e.
// exactly what hard_select excluded when it picked row m.
inline BoolMat exclusion_mask(const SelectionMatrix &sel) {
    BoolMat mask(sel.m(), sel.n, false);
    for (int r = 1; r < sel.m(); ++r) {
        for (int c = 0; c < sel.n; ++c)
            mask(r, c) = mask(r - 1, c);
        mask(r, sel.indices[r - 1]) = 1;
    }
    return mask;
}

// softmax_tau relaxation: row m = softmax((zeta_m + g_m)/tau) over the
// non-excluded antennas; excluded entries are exactly 0.
inline SoftSelection soft_select(const SelectionLogits &logits, const GumbelNoise &noise, double temperature,
                                 const BoolMat &excluded_mask) {
    if (!(temperature > 0.0))
        throw std::invalid_argument("soft_select: temperature must be positive");
    if (!logits.values.same_shape(noise.values) || excluded_mask.rows != logits.m() ||
        excluded_mask.cols != logits.n())
        throw std::invalid_argument("soft_select: shape mismatch");
    SoftSelection soft;
    soft.temperature = temperature;
    soft.rows = Mat(logits.m(), logits.n(), 0.0);
    for (int r = 0; r < logits.m(); ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < logits.n(); ++c)
            if (!excluded_mask(r, c))
                mx = std::max(mx, (logits.values(r, c) + noise.values(r, c)) / temperature);
        if (mx == -std::numeric_limits<double>::infinity())
            throw std::invalid_argument("soft_select: a row has every antenna excluded");
        double sum = 0.0;
        for (int c = 0; c < logits.n(); ++c) {
            if (excluded_mask(r, c))
                continue;
            const double e = std::exp((logits.values(r, c) + noise.values(r, c)) / temperature - mx);
            soft.rows(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < logits.n(); ++c)
            if (!excluded_mask(r, c))
                soft.rows(r, c) /= sum;
    }
    return soft;
}

// h_tilde = S h: gathers the selected antennas.
inline std::vector<std::complex<double>> subsample(const SelectionMatrix &sel, const ChannelVector &h) {
    if (h.size() != sel.n)
        throw std::invalid_argument("subsample: channel length does not match selection");
    std::vector<std::complex<double>> out(sel.indices.size());
    for (std::size_t r = 0; r < sel.indices.size(); ++r)
        out[r] = h.entries[sel.indices[r]];
    return out;
}

inline std::vector<std::complex<double>> subsample(const SelectionMatrix &sel,
                                                   std::span<const std::complex<double>> h) {
    if (static_cast<int>(h.size()) != sel.n)
        throw std::invalid_argument("subsample: channel length does not match selection");
    std::vector<std::complex<double>> out(sel.indices.size());
    for (std::size_t r = 0; r < sel.indices.size(); ++r)
        out[r] = h[sel.indices[r]];
    return out;
}

// Straight-through backward: row m of S is treated as
// p = softmax_tau(zeta_m + g_m) (masked like the forward argmax), and the
// returned matrix is the Jacobian-vector product
//   (1/tau) * (diag(p) - p p^T) * grad_row
// evaluated at the single Gumbel draw used in the forward pass. Excluded
// entries get exactly zero gradient.
inline Mat selection_backward(const Mat &grad_soft, const SelectionLogits &logits, const GumbelNoise &noise,
                              double temperature, const BoolMat &excluded_mask) {
    if (!grad_soft.same_shape(logits.values))
        throw std::invalid_argument("selection_backward: gradient shape mismatch");
    const SoftSelection soft = soft_select(logits, noise, temperature, excluded_mask);
    Mat out(logits.m(), logits.n(), 0.0);
    for (int r = 0; r < logits.m(); ++r) {
        double inner = 0.0;
        for (int c = 0; c < logits.n(); ++c)
            inner += grad_soft(r, c) * soft.rows(r, c);
        for (int c = 0; c < logits.n(); ++c) {
            if (excluded_mask(r, c))
                continue;
            out(r, c) = soft.rows(r, c) * (grad_soft(r, c) - inner) / temperature;
        }
    }
    return out;
}

// Summed Shannon entropy of the selection rows (natural log, 0*log 0 := 0).
inline double entropy_penalty(const Mat &probabilities) {
    double h = 0.0;
    for (double p : probabilities.a)
        if (p > 0.0)
            h -= p * std::log(p);
    return h;
}

// d(entropy_penalty)/d(zeta) for probabilities = class_probabilities(zeta):
// per row, -pi_k * (log pi_k + H_row).
inline Mat entropy_penalty_logit_grad(const Mat &probabilities) {
    Mat g(probabilities.rows, probabilities.cols, 0.0);
    for (int r = 0; r < probabilities.rows; ++r) {
        double h = 0.0;
        for (int c = 0; c < probabilities.cols; ++c) {
            const double p = probabilities(r, c);
            if (p > 0.0)
                h -= p * std::log(p);
        }
        for (int c = 0; c < probabilities.cols; ++c) {
            const double p = probabilities(r, c);
            g(r, c) = p > 0.0 ? -p * (std::log(p) + h) : 0.0;
        }
    }
    return g;
}

// Noise-free, exclusion-aware argmax of the logits; the evaluation-time and
// exported selection pattern.
inline std::vector<int> deterministic_indices(const SelectionLogits &logits) {
    GumbelNoise zero;
    zero.values = Mat(logits.m(), logits.n(), 0.0);
    return hard_select(logits, zero).indices;
}

} // namespace mext
