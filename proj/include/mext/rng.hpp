// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace mext {

// Named sub-stream tags. Every random draw in the project comes from an
// mt19937_64 seeded through mix_seed(master, tag, index...), so independent
// components (path sampling, noise, shuffling, Gumbel draws) never share or
// reorder a stream.
namespace stream {
inline constexpr std::uint64_t kPaths = 0x11;
inline constexpr std::uint64_t kNoise = 0x22;
inline constexpr std::uint64_t kSplit = 0x33;
inline constexpr std::uint64_t kNetInit = 0x44;
inline constexpr std::uint64_t kLogitInit = 0x55;
inline constexpr std::uint64_t kBatch = 0x66;
inline constexpr std::uint64_t kGumbel = 0x77;
inline constexpr std::uint64_t kSeedRepeat = 0x88;
} // namespace stream

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    s = splitmix64(s ^ c);
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0) {
    return std::mt19937_64(mix_seed(seed, a, b, c));
}

// Gumbel(0,1) via inverse CDF, g = -log(-log(u)). The uniform is clamped to
// [eps, 1-eps] so the double log never sees 0 or 1.
inline double gumbel_transform(double u) {
    constexpr double eps = 1e-12;
    u = std::clamp(u, eps, 1.0 - eps);
    return -std::log(-std::log(u));
}

inline double draw_gumbel(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return gumbel_transform(unit(rng));
}

} // namespace mext
