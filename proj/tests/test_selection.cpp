// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mext/selection.hpp"

using namespace mext;
using Catch::Approx;

namespace {

SelectionLogits logits_from(std::initializer_list<std::initializer_list<double>> rows) {
    SelectionLogits z;
    z.values = Mat(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (const auto &row : rows) {
        int c = 0;
        for (double v : row)
            z.values(r, c++) = v;
        ++r;
    }
    return z;
}

GumbelNoise zero_noise(int m, int n) {
    GumbelNoise g;
    g.values = Mat(m, n, 0.0);
    return g;
}

// Scalar probe for gradient checks: f(zeta) = sum grad_soft .* soft_select(zeta).
double soft_probe(const Mat &grad_soft, const SelectionLogits &logits, const GumbelNoise &noise, double tau,
                  const BoolMat &mask) {
    const SoftSelection soft = soft_select(logits, noise, tau, mask);
    double acc = 0.0;
    for (std::size_t i = 0; i < soft.rows.a.size(); ++i)
        acc += grad_soft.a[i] * soft.rows.a[i];
    return acc;
}

double rel_error(const Mat &got, const Mat &want) {
    double denom = 1e-6;
    for (double v : want.a)
        denom = std::max(denom, std::abs(v));
    double err = 0.0;
    for (std::size_t i = 0; i < got.a.size(); ++i)
        err = std::max(err, std::abs(got.a[i] - want.a[i]));
    return err / denom;
}

} // namespace

TEST_CASE("init_logits places each row's peak at (N/M)*m") {
    auto rng = make_rng(1);
    const auto z = init_logits(4, 64, -2.73e-3, 0.0, rng);
    for (int r = 0; r < 4; ++r) {
        int argmax = 0;
        for (int c = 1; c < 64; ++c)
            if (z.values(r, c) > z.values(r, argmax))
                argmax = c;
        REQUIRE(argmax == 16 * (r + 1) - 1); // 1-based peak at 16*m
    }
}

TEST_CASE("init_logits degenerate cases and validation") {
    auto rng = make_rng(2);
    const auto z = init_logits(3, 8, 0.0, 0.0, rng);
    for (double v : z.values.a)
        REQUIRE(v == 0.0);
    REQUIRE_THROWS_AS(init_logits(8, 8, -1.0, 0.1, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(init_logits(0, 8, -1.0, 0.1, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(init_logits(2, 8, -1.0, -0.1, rng), std::invalid_argument);
}

TEST_CASE("class_probabilities of a uniform row") {
    const auto z = logits_from({{0.0, 0.0, 0.0, 0.0}});
    const auto p = class_probabilities(z);
    for (int c = 0; c < 4; ++c)
        REQUIRE(p(0, c) == Approx(0.25).margin(1e-15));
}

TEST_CASE("class_probabilities hand-evaluated row") {
    const auto z = logits_from({{std::log(2.0), 0.0, 0.0}});
    const auto p = class_probabilities(z);
    REQUIRE(p(0, 0) == Approx(0.5).margin(1e-12));
    REQUIRE(p(0, 1) == Approx(0.25).margin(1e-12));
    REQUIRE(p(0, 2) == Approx(0.25).margin(1e-12));
}

TEST_CASE("class_probabilities is shift-invariant and overflow-safe") {
    auto rng = make_rng(3);
    std::normal_distribution<double> gauss(0.0, 2.0);
    SelectionLogits z;
    z.values = Mat(3, 6);
    for (double &v : z.values.a)
        v = gauss(rng);
    const auto p = class_probabilities(z);
    SelectionLogits shifted = z;
    for (int c = 0; c < 6; ++c) {
        shifted.values(0, c) += 1234.5;
        shifted.values(1, c) += 1e6; // would overflow a naive exp
    }
    const auto q = class_probabilities(shifted);
    for (std::size_t i = 0; i < p.a.size(); ++i) {
        REQUIRE(std::isfinite(q.a[i]));
        REQUIRE(q.a[i] == Approx(p.a[i]).margin(1e-9));
    }
}

TEST_CASE("gumbel_transform fixed points") {
    REQUIRE(gumbel_transform(1.0 / std::numbers::e) == Approx(0.0).margin(1e-12));
    REQUIRE(gumbel_transform(std::exp(-std::numbers::e)) == Approx(-1.0).margin(1e-12));
    // clamping keeps the tails finite
    REQUIRE(std::isfinite(gumbel_transform(0.0)));
    REQUIRE(std::isfinite(gumbel_transform(1.0)));
}

TEST_CASE("sample_gumbel mean approaches the Euler-Mascheroni constant") {
    auto rng = make_rng(4);
    const auto g = sample_gumbel(1000, 1000, rng);
    double mean = 0.0;
    for (double v : g.values.a)
        mean += v;
    mean /= static_cast<double>(g.values.a.size());
    REQUIRE(mean == Approx(0.5772156649).margin(0.01));
}

TEST_CASE("hard_select picks the dominant logit at zero noise") {
    const auto z = logits_from({{10.0, 0.0, -10.0}});
    const auto sel = hard_select(z, zero_noise(1, 3));
    REQUIRE(sel.indices == std::vector<int>{0});
    REQUIRE(sel.dense()(0, 0) == 1.0);
}

TEST_CASE("hard_select exclusion forces a permutation when M = N") {
    auto rng = make_rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        SelectionLogits z;
        z.values = Mat(2, 2);
        for (double &v : z.values.a)
            v = gauss(rng);
        const auto sel = hard_select(z, sample_gumbel(2, 2, rng));
        REQUIRE(((sel.indices == std::vector<int>{0, 1}) || (sel.indices == std::vector<int>{1, 0})));
    }
}

TEST_CASE("hard_select follows the Gumbel-Max law") {
    // pi = [0.7, 0.2, 0.1] as logits = log(pi); empirical frequencies over
    // 1e5 draws must match within +-0.01 per class.
    const auto z = logits_from({{std::log(0.7), std::log(0.2), std::log(0.1)}});
    auto rng = make_rng(6);
    int counts[3] = {0, 0, 0};
    const int trials = 100000;
    for (int t = 0; t < trials; ++t)
        counts[hard_select(z, sample_gumbel(1, 3, rng)).indices[0]] += 1;
    REQUIRE(counts[0] / double(trials) == Approx(0.7).margin(0.01));
    REQUIRE(counts[1] / double(trials) == Approx(0.2).margin(0.01));
    REQUIRE(counts[2] / double(trials) == Approx(0.1).margin(0.01));
}

TEST_CASE("hard_select rejects more rows than antennas") {
    SelectionLogits z;
    z.values = Mat(3, 2, 0.0);
    REQUIRE_THROWS_AS(hard_select(z, zero_noise(3, 2)), std::invalid_argument);
}

TEST_CASE("soft_select flattens at large temperature and sharpens at small") {
    const auto z = logits_from({{3.0, -1.0, 0.5, 0.25}});
    const BoolMat no_mask(1, 4, false);
    const auto flat = soft_select(z, zero_noise(1, 4), 1e6, no_mask);
    for (int c = 0; c < 4; ++c)
        REQUIRE(flat.rows(0, c) == Approx(0.25).margin(1e-4));
    const auto sharp = soft_select(z, zero_noise(1, 4), 0.01, no_mask);
    REQUIRE(sharp.rows(0, 0) >= 1.0 - 1e-6);
}

TEST_CASE("soft_select rows sum to one and excluded entries are exactly zero") {
    auto rng = make_rng(8);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        SelectionLogits z;
        z.values = Mat(3, 5);
        for (double &v : z.values.a)
            v = gauss(rng);
        const auto noise = sample_gumbel(3, 5, rng);
        const auto sel = hard_select(z, noise);
        const auto mask = exclusion_mask(sel);
        const auto soft = soft_select(z, noise, 0.7, mask);
        for (int r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (int c = 0; c < 5; ++c) {
                if (mask(r, c))
                    REQUIRE(soft.rows(r, c) == 0.0);
                sum += soft.rows(r, c);
            }
            REQUIRE(sum == Approx(1.0).margin(1e-10));
        }
    }
}

TEST_CASE("soft_select max entry grows as temperature falls") {
    auto rng = make_rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SelectionLogits z;
    z.values = Mat(2, 6);
    for (double &v : z.values.a)
        v = gauss(rng);
    const auto noise = sample_gumbel(2, 6, rng);
    const auto mask = exclusion_mask(hard_select(z, noise));
    const double taus[] = {5.0, 2.0, 1.0, 0.5, 0.1};
    std::vector<double> prev(2, 0.0);
    for (double tau : taus) {
        const auto soft = soft_select(z, noise, tau, mask);
        for (int r = 0; r < 2; ++r) {
            double mx = 0.0;
            for (int c = 0; c < 6; ++c)
                mx = std::max(mx, soft.rows(r, c));
            REQUIRE(mx >= prev[r]);
            prev[r] = mx;
        }
    }
}

TEST_CASE("soft_select validates the temperature") {
    const auto z = logits_from({{0.0, 1.0}});
    REQUIRE_THROWS_AS(soft_select(z, zero_noise(1, 2), 0.0, BoolMat(1, 2, false)), std::invalid_argument);
    REQUIRE_THROWS_AS(soft_select(z, zero_noise(1, 2), -1.0, BoolMat(1, 2, false)), std::invalid_argument);
}

TEST_CASE("subsample gathers the selected antennas") {
    SelectionMatrix sel;
    sel.n = 4;
    sel.indices = {1, 3};
    ChannelVector h;
    h.entries = {{1, 0}, {2, 1}, {3, 2}, {4, 3}};
    const auto out = subsample(sel, h);
    REQUIRE(out.size() == 2);
    REQUIRE(out[0] == h.entries[1]);
    REQUIRE(out[1] == h.entries[3]);
}

TEST_CASE("subsample matches the dense matrix-vector product") {
    auto rng = make_rng(10);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        SelectionLogits z;
        z.values = Mat(3, 7);
        for (double &v : z.values.a)
            v = gauss(rng);
        const auto sel = hard_select(z, sample_gumbel(3, 7, rng));
        ChannelVector h;
        h.entries.resize(7);
        for (auto &e : h.entries)
            e = {gauss(rng), gauss(rng)};
        const auto fast = subsample(sel, h);
        const Mat s = sel.dense();
        for (int r = 0; r < 3; ++r) {
            std::complex<double> acc(0.0, 0.0);
            for (int c = 0; c < 7; ++c)
                acc += s(r, c) * h.entries[c];
            REQUIRE(std::abs(fast[r] - acc) < 1e-14);
        }
    }
}

TEST_CASE("identity-ordered full selection reproduces the channel") {
    SelectionMatrix sel;
    sel.n = 3;
    sel.indices = {0, 1, 2};
    ChannelVector h;
    h.entries = {{1, 2}, {3, 4}, {5, 6}};
    REQUIRE(subsample(sel, h) == h.entries);
}

TEST_CASE("selection_backward annihilates constant row gradients") {
    const auto z = logits_from({{0.3, -0.7, 1.1, 0.2}});
    auto rng = make_rng(11);
    const auto noise = sample_gumbel(1, 4, rng);
    const BoolMat mask(1, 4, false);
    Mat grad(1, 4, 3.21);
    const auto gz = selection_backward(grad, z, noise, 0.8, mask);
    for (double v : gz.a)
        REQUIRE(std::abs(v) < 1e-15);
}

TEST_CASE("selection_backward matches central finite differences") {
    auto rng = make_rng(12);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double tau = 0.9;
    const double step = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        SelectionLogits z;
        z.values = Mat(3, 5);
        for (double &v : z.values.a)
            v = gauss(rng);
        const auto noise = sample_gumbel(3, 5, rng);
        const auto mask = exclusion_mask(hard_select(z, noise));
        Mat grad(3, 5);
        for (double &v : grad.a)
            v = gauss(rng);
        const auto got = selection_backward(grad, z, noise, tau, mask);
        Mat fd(3, 5, 0.0);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 5; ++c) {
                SelectionLogits zp = z, zm = z;
                zp.values(r, c) += step;
                zm.values(r, c) -= step;
                fd(r, c) = (soft_probe(grad, zp, noise, tau, mask) - soft_probe(grad, zm, noise, tau, mask)) /
                           (2.0 * step);
            }
        REQUIRE(rel_error(got, fd) < 1e-4);
    }
}

TEST_CASE("selection_backward zeroes excluded entries") {
    auto rng = make_rng(13);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SelectionLogits z;
    z.values = Mat(4, 6);
    for (double &v : z.values.a)
        v = gauss(rng);
    const auto noise = sample_gumbel(4, 6, rng);
    const auto sel = hard_select(z, noise);
    const auto mask = exclusion_mask(sel);
    Mat grad(4, 6);
    for (double &v : grad.a)
        v = gauss(rng);
    const auto gz = selection_backward(grad, z, noise, 0.5, mask);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 6; ++c)
            if (mask(r, c))
                REQUIRE(gz(r, c) == 0.0);
}

TEST_CASE("entropy_penalty reference values") {
    Mat uniform2(1, 2, 0.5);
    REQUIRE(entropy_penalty(uniform2) == Approx(std::log(2.0)).margin(1e-12));

    Mat onehot(3, 4, 0.0);
    onehot(0, 1) = 1.0;
    onehot(1, 0) = 1.0;
    onehot(2, 3) = 1.0;
    REQUIRE(entropy_penalty(onehot) == 0.0);

    const int m = 5, n = 16;
    Mat uni(m, n, 1.0 / n);
    REQUIRE(entropy_penalty(uni) == Approx(m * std::log(double(n))).margin(1e-10));
}

TEST_CASE("entropy_penalty_logit_grad matches finite differences") {
    auto rng = make_rng(14);
    std::normal_distribution<double> gauss(0.0, 1.5);
    SelectionLogits z;
    z.values = Mat(2, 5);
    for (double &v : z.values.a)
        v = gauss(rng);
    const auto grad = entropy_penalty_logit_grad(class_probabilities(z));
    const double step = 1e-6;
    Mat fd(2, 5, 0.0);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 5; ++c) {
            SelectionLogits zp = z, zm = z;
            zp.values(r, c) += step;
            zm.values(r, c) -= step;
            fd(r, c) = (entropy_penalty(class_probabilities(zp)) - entropy_penalty(class_probabilities(zm))) /
                       (2.0 * step);
        }
    REQUIRE(rel_error(grad, fd) < 1e-5);
}

TEST_CASE("deterministic_indices of the order-preserving init") {
    auto rng = make_rng(15);
    const auto z = init_logits(4, 64, -2.73e-3, 0.0, rng);
    REQUIRE(deterministic_indices(z) == std::vector<int>{15, 31, 47, 63}); // 1-based 16, 32, 48, 64
    REQUIRE(deterministic_indices(z) == deterministic_indices(z));
}

TEST_CASE("shift invariance of probabilities, hard selection and pattern") {
    auto rng = make_rng(16);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SelectionLogits z;
    z.values = Mat(3, 6);
    for (double &v : z.values.a)
        v = gauss(rng);
    const auto noise = sample_gumbel(3, 6, rng);
    SelectionLogits shifted = z;
    for (int c = 0; c < 6; ++c)
        shifted.values(1, c) += 42.0;
    const auto p = class_probabilities(z);
    const auto q = class_probabilities(shifted);
    for (std::size_t i = 0; i < p.a.size(); ++i)
        REQUIRE(q.a[i] == Approx(p.a[i]).margin(1e-9));
    REQUIRE(hard_select(z, noise).indices == hard_select(shifted, noise).indices);
    REQUIRE(deterministic_indices(z) == deterministic_indices(shifted));
}

TEST_CASE("hard_select exclusion soundness over random instances") {
    auto rng = make_rng(17);
    std::normal_distribution<double> gauss(0.0, 3.0);
    std::uniform_int_distribution<int> npick(2, 12);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = npick(rng);
        std::uniform_int_distribution<int> mpick(1, n);
        const int m = mpick(rng);
        SelectionLogits z;
        z.values = Mat(m, n);
        for (double &v : z.values.a)
            v = gauss(rng);
        const auto sel = hard_select(z, sample_gumbel(m, n, rng));
        std::vector<bool> seen(n, false);
        for (int idx : sel.indices) {
            REQUIRE(idx >= 0);
            REQUIRE(idx < n);
            REQUIRE(!seen[idx]);
            seen[idx] = true;
        }
        const Mat s = sel.dense();
        for (int r = 0; r < m; ++r) {
            double sum = 0.0;
            for (int c = 0; c < n; ++c)
                sum += s(r, c);
            REQUIRE(sum == 1.0);
        }
    }
}
