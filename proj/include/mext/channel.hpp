// SPDX-License-Identifier: Apache-2.0
//
// Geometric multipath channel model: linear array geometries (uniform and
// non-uniform), spatial steering vectors, multipath synthesis of paired
// uplink/downlink channel vectors, and white Gaussian measurement noise.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mext/rng.hpp"

namespace mext {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

enum class GeometryKind { ULA, NULA };

inline std::string to_string(GeometryKind k) { return k == GeometryKind::ULA ? "ula" : "nula"; }

inline GeometryKind geometry_kind_from_string(const std::string &s) {
    if (s == "ula")
        return GeometryKind::ULA;
    if (s == "nula")
        return GeometryKind::NULA;
    throw std::invalid_argument("unknown geometry kind: '" + s + "' (expected 'ula' or 'nula')");
}

// Antenna positions along one axis, measured from the first element.
struct ArrayGeometry {
    std::vector<double> positions;           // meters, positions[0] == 0, strictly increasing
    double carrier_wavelength_uplink = 0.0;  // lambda_U, meters
    GeometryKind kind = GeometryKind::ULA;

    int size() const { return static_cast<int>(positions.size()); }
};

// One propagation path: linear amplitude, phase shift, delay, direction of
// arrival. Shared between the uplink and downlink frequencies of a sample.
struct Path {
    double gain = 0.0;  // alpha_i, linear, >= 0
    double phase = 0.0; // phi_i, radians in [0, 2*pi)
    double delay = 0.0; // tau_i, seconds, >= 0
    double angle = 0.0; // theta_i, radians, |angle| < pi/2
};

struct PathSet {
    std::vector<Path> paths;
    int size() const { return static_cast<int>(paths.size()); }
};

struct ChannelVector {
    std::vector<std::complex<double>> entries;
    double frequency = 0.0; // Hz
    int size() const { return static_cast<int>(entries.size()); }
};

enum class GainDistribution { Rayleigh, Uniform };

inline std::string to_string(GainDistribution d) { return d == GainDistribution::Rayleigh ? "rayleigh" : "uniform"; }

inline GainDistribution gain_distribution_from_string(const std::string &s) {
    if (s == "rayleigh")
        return GainDistribution::Rayleigh;
    if (s == "uniform")
        return GainDistribution::Uniform;
    throw std::invalid_argument("unknown gain distribution: '" + s + "'");
}

// How per-path delays are drawn. AngleCoupled ties each delay to the path's
// direction through the uniform quantile map, the way path length follows
// geometry in a traced environment; the delay marginal stays uniform on
// [0, delay_spread], but delays become identifiable from the array response,
// which is what makes cross-frequency extrapolation possible at all. With
// Independent draws the phase/delay ambiguity makes the downlink phase of
// each path unpredictable from a single uplink snapshot, so that mode is
// only useful for ablation.
enum class DelayCoupling { AngleCoupled, Independent };

inline std::string to_string(DelayCoupling c) { return c == DelayCoupling::AngleCoupled ? "angle" : "independent"; }

inline DelayCoupling delay_coupling_from_string(const std::string &s) {
    if (s == "angle")
        return DelayCoupling::AngleCoupled;
    if (s == "independent")
        return DelayCoupling::Independent;
    throw std::invalid_argument("unknown delay coupling: '" + s + "' (expected 'angle' or 'independent')");
}

// The measured-spacing sequence of the 16-element non-uniform array, in
// uplink wavelengths. Tiled cyclically to cover larger arrays.
inline const std::vector<double> &paper_nula_spacings() {
    static const std::vector<double> v = [] {
        const double f[15] = {2.0 / 3.0,  6.0 / 5.0,  11.0 / 7.0, 1.0 / 8.0,  4.0 / 9.0,
                              10.0 / 11.0, 5.0 / 12.0, 3.0 / 13.0, 17.0 / 15.0, 3.0 / 16.0,
                              1.0 / 18.0, 7.0 / 20.0, 5.0 / 21.0, 1.0 / 22.0, 4.0 / 25.0};
        std::vector<double> out(std::begin(f), std::end(f));
        for (double &x : out)
            x *= 0.2;
        return out;
    }();
    return v;
}

// Synthetic scenario description: what sample_scenario draws paths from and
// which frequencies/geometry the dataset generator uses.
struct ScenarioConfig {
    int n_antennas = 64;
    int n_paths = 5;
    double f_uplink = 2.4e9;   // Hz
    double f_downlink = 2.5e9; // Hz
    double angle_spread = std::numbers::pi / 3.0; // half-width of the uniform DoA range, radians
    double delay_spread = 100e-9;                 // delays uniform on [0, delay_spread], seconds
    GainDistribution gain_distribution = GainDistribution::Rayleigh;
    DelayCoupling delay_coupling = DelayCoupling::AngleCoupled;
    GeometryKind geometry = GeometryKind::NULA;
    double ula_spacing = 0.5;                     // uplink wavelengths
    std::vector<double> nula_base_spacings = paper_nula_spacings(); // uplink wavelengths
    std::uint64_t rng_seed = 1;
};

inline void validate(const ScenarioConfig &c) {
    if (c.n_antennas < 2)
        throw std::invalid_argument("scenario: n_antennas must be >= 2");
    if (c.n_paths < 1)
        throw std::invalid_argument("scenario: n_paths must be >= 1");
    if (c.f_uplink <= 0.0 || c.f_downlink <= 0.0)
        throw std::invalid_argument("scenario: carrier frequencies must be positive");
    if (c.angle_spread < 0.0 || c.angle_spread >= std::numbers::pi / 2.0)
        throw std::invalid_argument("scenario: angle_spread must lie in [0, pi/2)");
    if (c.delay_spread < 0.0)
        throw std::invalid_argument("scenario: delay_spread must be non-negative");
    if (c.ula_spacing <= 0.0)
        throw std::invalid_argument("scenario: ula_spacing must be positive");
    if (c.nula_base_spacings.empty())
        throw std::invalid_argument("scenario: nula_base_spacings must be non-empty");
    for (double s : c.nula_base_spacings)
        if (s <= 0.0)
            throw std::invalid_argument("scenario: nula_base_spacings must be strictly positive");
}

// Uniform linear array: positions[k] = k * spacing * wavelength.
inline ArrayGeometry ula_positions(int n, double spacing_wavelengths, double wavelength) {
    if (n < 2)
        throw std::invalid_argument("ula_positions: need at least 2 antennas");
    if (spacing_wavelengths <= 0.0 || wavelength <= 0.0)
        throw std::invalid_argument("ula_positions: spacing and wavelength must be positive");
    ArrayGeometry g;
    g.kind = GeometryKind::ULA;
    g.carrier_wavelength_uplink = wavelength;
    g.positions.resize(n);
    for (int k = 0; k < n; ++k)
        g.positions[k] = k * spacing_wavelengths * wavelength;
    return g;
}

// Non-uniform linear array: the base spacing sequence (wavelength units) is
// tiled cyclically until n-1 spacings are produced, then prefix-summed.
inline ArrayGeometry nula_positions(int n, const std::vector<double> &base_spacings, double wavelength) {
    if (n < 2)
        throw std::invalid_argument("nula_positions: need at least 2 antennas");
    if (wavelength <= 0.0)
        throw std::invalid_argument("nula_positions: wavelength must be positive");
    if (base_spacings.empty())
        throw std::invalid_argument("nula_positions: base_spacings must be non-empty");
    for (double s : base_spacings)
        if (s <= 0.0)
            throw std::invalid_argument("nula_positions: spacings must be strictly positive");
    ArrayGeometry g;
    g.kind = GeometryKind::NULA;
    g.carrier_wavelength_uplink = wavelength;
    g.positions.resize(n);
    g.positions[0] = 0.0;
    for (int k = 1; k < n; ++k)
        g.positions[k] = g.positions[k - 1] + base_spacings[(k - 1) % base_spacings.size()] * wavelength;
    return g;
}

inline ArrayGeometry make_geometry(const ScenarioConfig &c) {
    validate(c);
    const double lambda_u = kSpeedOfLight / c.f_uplink;
    if (c.geometry == GeometryKind::ULA)
        return ula_positions(c.n_antennas, c.ula_spacing, lambda_u);
    return nula_positions(c.n_antennas, c.nula_base_spacings, lambda_u);
}

// Spatial steering vector: entry k = exp(-j*2*pi*f*d_k*sin(angle)/c).
inline std::vector<std::complex<double>> steering_vector(const ArrayGeometry &geometry, double angle, double frequency) {
    if (!(std::abs(angle) < std::numbers::pi / 2.0))
        throw std::invalid_argument("steering_vector: |angle| must be < pi/2");
    if (frequency <= 0.0)
        throw std::invalid_argument("steering_vector: frequency must be positive");
    const double s = std::sin(angle);
    const double k_wave = 2.0 * std::numbers::pi * frequency / kSpeedOfLight;
    std::vector<std::complex<double>> a(geometry.positions.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        a[k] = std::polar(1.0, -k_wave * geometry.positions[k] * s);
    return a;
}

// Multipath synthesis: h = sum_i gain_i * e^{j*phase_i} * e^{-j*2*pi*f*delay_i}
// * steering(angle_i, f). Gains are frequency-flat, so the uplink/downlink
// difference enters only through the delay term and the steering vector.
inline ChannelVector synthesize_channel(const PathSet &paths, const ArrayGeometry &geometry, double frequency) {
    if (frequency <= 0.0)
        throw std::invalid_argument("synthesize_channel: frequency must be positive");
    ChannelVector h;
    h.frequency = frequency;
    h.entries.assign(geometry.positions.size(), {0.0, 0.0});
    for (const Path &p : paths.paths) {
        if (p.gain == 0.0)
            continue;
        const std::complex<double> coeff =
            std::polar(p.gain, p.phase - 2.0 * std::numbers::pi * frequency * p.delay);
        const auto a = steering_vector(geometry, p.angle, frequency);
        for (std::size_t k = 0; k < h.entries.size(); ++k)
            h.entries[k] += coeff * a[k];
    }
    return h;
}

// Draws one PathSet: angle ~ U(-spread, spread), delay uniform on
// [0, delay_spread], phase ~ U[0, 2*pi), gains from the configured
// distribution normalized to unit total power. Under AngleCoupled the delay
// is the angle's quantile scaled into [0, delay_spread] (same marginal, one
// fewer draw); per-path draw order is angle, [delay,] phase, gain.
inline PathSet sample_scenario(const ScenarioConfig &config, std::mt19937_64 &rng) {
    validate(config);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PathSet ps;
    ps.paths.resize(config.n_paths);
    double power = 0.0;
    for (Path &p : ps.paths) {
        p.angle = config.angle_spread > 0.0 ? (2.0 * unit(rng) - 1.0) * config.angle_spread : 0.0;
        if (config.delay_coupling == DelayCoupling::AngleCoupled) {
            const double q = config.angle_spread > 0.0 ? (p.angle + config.angle_spread) / (2.0 * config.angle_spread)
                                                       : 0.5;
            p.delay = q * config.delay_spread;
        } else {
            p.delay = config.delay_spread > 0.0 ? unit(rng) * config.delay_spread : 0.0;
        }
        p.phase = unit(rng) * 2.0 * std::numbers::pi;
        const double u = unit(rng);
        p.gain = config.gain_distribution == GainDistribution::Rayleigh
                     ? std::sqrt(-2.0 * std::log(std::max(u, 1e-300)))
                     : u;
        power += p.gain * p.gain;
    }
    if (power > 0.0) {
        const double inv = 1.0 / std::sqrt(power);
        for (Path &p : ps.paths)
            p.gain *= inv;
    } else {
        const double g = 1.0 / std::sqrt(static_cast<double>(config.n_paths));
        for (Path &p : ps.paths)
            p.gain = g;
    }
    return ps;
}

// Circularly-symmetric complex Gaussian noise with per-entry variance
// noise_variance (real/imag parts each variance/2). Draw order per entry is
// real part then imaginary part.
inline ChannelVector add_awgn(const ChannelVector &h, double noise_variance, std::mt19937_64 &rng) {
    if (noise_variance < 0.0)
        throw std::invalid_argument("add_awgn: noise variance must be non-negative");
    ChannelVector out = h;
    if (noise_variance == 0.0)
        return out;
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_variance / 2.0));
    for (auto &e : out.entries) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        e += std::complex<double>(re, im);
    }
    return out;
}

} // namespace mext
