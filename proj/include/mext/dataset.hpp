// SPDX-License-Identifier: Apache-2.0
//
// Paired uplink/downlink channel datasets: in-memory container, deterministic
// synthesis from a ScenarioConfig, the little-endian "MEXD" binary file
// format, and its JSON sidecar.
#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mext/channel.hpp"
#include "mext/errors.hpp"
#include "mext/rng.hpp"

namespace mext {

struct Dataset {
    int n = 0; // antennas per channel vector
    double f_uplink = 0.0;
    double f_downlink = 0.0;
    // Sample-major flat storage, one length-n block per sample.
    std::vector<std::complex<double>> uplink;
    std::vector<std::complex<double>> downlink;

    std::int64_t num_samples() const { return n == 0 ? 0 : static_cast<std::int64_t>(uplink.size()) / n; }

    std::span<const std::complex<double>> up(std::int64_t i) const {
        return {uplink.data() + i * n, static_cast<std::size_t>(n)};
    }
    std::span<const std::complex<double>> down(std::int64_t i) const {
        return {downlink.data() + i * n, static_cast<std::size_t>(n)};
    }
    std::span<std::complex<double>> up(std::int64_t i) { return {uplink.data() + i * n, static_cast<std::size_t>(n)}; }
    std::span<std::complex<double>> down(std::int64_t i) {
        return {downlink.data() + i * n, static_cast<std::size_t>(n)};
    }
};

// Synthesizes num_samples paired channels. Sample i draws its PathSet from a
// stream seeded by (scenario seed, sample index), so generation is
// order-independent and any sample can be re-derived in isolation.
inline Dataset synth_dataset(const ScenarioConfig &scenario, std::int64_t num_samples) {
    validate(scenario);
    if (num_samples < 1)
        throw std::invalid_argument("synth_dataset: need at least one sample");
    const ArrayGeometry geom = make_geometry(scenario);
    Dataset ds;
    ds.n = scenario.n_antennas;
    ds.f_uplink = scenario.f_uplink;
    ds.f_downlink = scenario.f_downlink;
    ds.uplink.resize(static_cast<std::size_t>(num_samples) * ds.n);
    ds.downlink.resize(static_cast<std::size_t>(num_samples) * ds.n);
    for (std::int64_t i = 0; i < num_samples; ++i) {
        auto rng = make_rng(scenario.rng_seed, stream::kPaths, static_cast<std::uint64_t>(i));
        const PathSet paths = sample_scenario(scenario, rng);
        const ChannelVector hu = synthesize_channel(paths, geom, scenario.f_uplink);
        const ChannelVector hd = synthesize_channel(paths, geom, scenario.f_downlink);
        std::copy(hu.entries.begin(), hu.entries.end(), ds.up(i).begin());
        std::copy(hd.entries.begin(), hd.entries.end(), ds.down(i).begin());
    }
    return ds;
}

// Seeded-shuffle split into (train, test); train gets round(ratio * num)
// samples, clamped so neither side is empty.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset &ds, double split_ratio, std::uint64_t seed) {
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw std::invalid_argument("split_dataset: split ratio must lie in (0, 1)");
    const std::int64_t num = ds.num_samples();
    if (num < 2)
        throw std::invalid_argument("split_dataset: need at least 2 samples");
    std::vector<std::int64_t> perm(num);
    for (std::int64_t i = 0; i < num; ++i)
        perm[i] = i;
    auto rng = make_rng(seed, stream::kSplit);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::int64_t n_train = std::llround(split_ratio * static_cast<double>(num));
    n_train = std::max<std::int64_t>(1, std::min(num - 1, n_train));

    auto take = [&](std::int64_t begin, std::int64_t count) {
        Dataset out;
        out.n = ds.n;
        out.f_uplink = ds.f_uplink;
        out.f_downlink = ds.f_downlink;
        out.uplink.resize(static_cast<std::size_t>(count) * ds.n);
        out.downlink.resize(static_cast<std::size_t>(count) * ds.n);
        for (std::int64_t i = 0; i < count; ++i) {
            const std::int64_t src = perm[begin + i];
            std::copy(ds.up(src).begin(), ds.up(src).end(), out.up(i).begin());
            std::copy(ds.down(src).begin(), ds.down(src).end(), out.down(i).begin());
        }
        return out;
    };
    return {take(0, n_train), take(n_train, num - n_train)};
}

// Corrupts the uplink side in place with AWGN of the given variance; targets
// stay clean. Sample i uses a stream seeded by (base_seed, i), so with a
// fixed base seed the underlying draws are identical across variances and
// the corruption scales monotonically with the variance.
inline void add_uplink_noise(Dataset &ds, double noise_variance, std::uint64_t base_seed) {
    if (noise_variance < 0.0)
        throw std::invalid_argument("add_uplink_noise: noise variance must be non-negative");
    if (noise_variance == 0.0)
        return;
    const std::int64_t num = ds.num_samples();
    for (std::int64_t i = 0; i < num; ++i) {
        auto rng = make_rng(base_seed, stream::kNoise, static_cast<std::uint64_t>(i));
        ChannelVector h;
        h.frequency = ds.f_uplink;
        h.entries.assign(ds.up(i).begin(), ds.up(i).end());
        const ChannelVector noisy = add_awgn(h, noise_variance, rng);
        std::copy(noisy.entries.begin(), noisy.entries.end(), ds.up(i).begin());
    }
}

// ---------------------------------------------------------------------------
// Binary file format. Little-endian throughout:
//   magic "MEXD" | version u32 | N u32 | num_samples u64 | f_uplink f64 |
//   f_downlink f64 | per sample: 2N f64 uplink (re, im interleaved), then
//   2N f64 downlink.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

namespace detail {

inline void put_u32(std::string &buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string &buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string &buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

struct ByteReader {
    const unsigned char *p;
    const unsigned char *end;

    void need(std::size_t k, const char *what) {
        if (static_cast<std::size_t>(end - p) < k)
            throw io_error(std::string("dataset file truncated while reading ") + what);
    }
    std::uint32_t u32(const char *what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint64_t u64(const char *what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    double f64(const char *what) { return std::bit_cast<double>(u64(what)); }
};

} // namespace detail

inline nlohmann::json scenario_to_json(const ScenarioConfig &c) {
    return nlohmann::json{{"n_antennas", c.n_antennas},
                          {"n_paths", c.n_paths},
                          {"f_uplink", c.f_uplink},
                          {"f_downlink", c.f_downlink},
                          {"angle_spread", c.angle_spread},
                          {"delay_spread", c.delay_spread},
                          {"gain_distribution", to_string(c.gain_distribution)},
                          {"delay_coupling", to_string(c.delay_coupling)},
                          {"geometry", to_string(c.geometry)},
                          {"ula_spacing", c.ula_spacing},
                          {"nula_base_spacings", c.nula_base_spacings},
                          {"rng_seed", c.rng_seed}};
}

inline ScenarioConfig scenario_from_json(const nlohmann::json &j, ScenarioConfig c = {}) {
    static const char *known[] = {"n_antennas",    "n_paths",  "f_uplink",    "f_downlink",
                                  "angle_spread",  "delay_spread", "gain_distribution", "delay_coupling",
                                  "geometry",      "ula_spacing",  "nula_base_spacings", "rng_seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char *k : known)
            ok = ok || it.key() == k;
        if (!ok)
            throw std::invalid_argument("unknown scenario key: '" + it.key() + "'");
    }
    if (j.contains("n_antennas"))
        c.n_antennas = j.at("n_antennas").get<int>();
    if (j.contains("n_paths"))
        c.n_paths = j.at("n_paths").get<int>();
    if (j.contains("f_uplink"))
        c.f_uplink = j.at("f_uplink").get<double>();
    if (j.contains("f_downlink"))
        c.f_downlink = j.at("f_downlink").get<double>();
    if (j.contains("angle_spread"))
        c.angle_spread = j.at("angle_spread").get<double>();
    if (j.contains("delay_spread"))
        c.delay_spread = j.at("delay_spread").get<double>();
    if (j.contains("gain_distribution"))
        c.gain_distribution = gain_distribution_from_string(j.at("gain_distribution").get<std::string>());
    if (j.contains("delay_coupling"))
        c.delay_coupling = delay_coupling_from_string(j.at("delay_coupling").get<std::string>());
    if (j.contains("geometry"))
        c.geometry = geometry_kind_from_string(j.at("geometry").get<std::string>());
    if (j.contains("ula_spacing"))
        c.ula_spacing = j.at("ula_spacing").get<double>();
    if (j.contains("nula_base_spacings"))
        c.nula_base_spacings = j.at("nula_base_spacings").get<std::vector<double>>();
    if (j.contains("rng_seed"))
        c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return c;
}

inline std::string sidecar_path(const std::string &dataset_path) { return dataset_path + ".json"; }

// Writes the binary dataset plus "<path>.json" sidecar with the generating
// scenario and seed.
inline void write_dataset(const std::string &path, const Dataset &ds, const ScenarioConfig &scenario) {
    std::string buf;
    buf.reserve(40 + ds.uplink.size() * 32);
    buf += "MEXD";
    detail::put_u32(buf, kDatasetFormatVersion);
    detail::put_u32(buf, static_cast<std::uint32_t>(ds.n));
    detail::put_u64(buf, static_cast<std::uint64_t>(ds.num_samples()));
    detail::put_f64(buf, ds.f_uplink);
    detail::put_f64(buf, ds.f_downlink);
    for (std::int64_t i = 0; i < ds.num_samples(); ++i) {
        for (const auto &e : ds.up(i)) {
            detail::put_f64(buf, e.real());
            detail::put_f64(buf, e.imag());
        }
        for (const auto &e : ds.down(i)) {
            detail::put_f64(buf, e.real());
            detail::put_f64(buf, e.imag());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw io_error("cannot open dataset file for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw io_error("failed writing dataset file: " + path);
    out.close();

    nlohmann::json side{{"format_version", kDatasetFormatVersion},
                        {"scenario", scenario_to_json(scenario)},
                        {"seed", scenario.rng_seed},
                        {"num_samples", ds.num_samples()}};
    std::ofstream sc(sidecar_path(path), std::ios::trunc);
    if (!sc)
        throw io_error("cannot open dataset sidecar for writing: " + sidecar_path(path));
    sc << side.dump(2) << "\n";
}

inline Dataset read_dataset(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open dataset file: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    detail::ByteReader r{reinterpret_cast<const unsigned char *>(buf.data()),
                         reinterpret_cast<const unsigned char *>(buf.data()) + buf.size()};
    r.need(4, "magic");
    if (std::memcmp(r.p, "MEXD", 4) != 0)
        throw io_error("bad dataset magic (expected MEXD): " + path);
    r.p += 4;
    const std::uint32_t version = r.u32("version");
    if (version != kDatasetFormatVersion)
        throw io_error("unsupported dataset format version " + std::to_string(version));
    Dataset ds;
    ds.n = static_cast<int>(r.u32("antenna count"));
    const std::uint64_t num = r.u64("sample count");
    ds.f_uplink = r.f64("uplink frequency");
    ds.f_downlink = r.f64("downlink frequency");
    if (ds.n < 1)
        throw io_error("dataset header has invalid antenna count");
    r.need(num * ds.n * 4ULL * 8ULL, "samples");
    ds.uplink.resize(num * ds.n);
    ds.downlink.resize(num * ds.n);
    for (std::uint64_t i = 0; i < num; ++i) {
        for (int k = 0; k < ds.n; ++k) {
            const double re = r.f64("sample");
            const double im = r.f64("sample");
            ds.uplink[i * ds.n + k] = {re, im};
        }
        for (int k = 0; k < ds.n; ++k) {
            const double re = r.f64("sample");
            const double im = r.f64("sample");
            ds.downlink[i * ds.n + k] = {re, im};
        }
    }
    if (r.p != r.end)
        throw io_error("dataset file has trailing bytes: " + path);
    return ds;
}

// Loads "<path>.json"; returns false if the sidecar does not exist.
inline bool read_sidecar(const std::string &dataset_path, ScenarioConfig &scenario_out) {
    std::ifstream in(sidecar_path(dataset_path));
    if (!in)
        return false;
    nlohmann::json j;
    try {
        in >> j;
        scenario_out = scenario_from_json(j.at("scenario"));
    } catch (const std::exception &e) {
        throw io_error("bad dataset sidecar " + sidecar_path(dataset_path) + ": " + e.what());
    }
    return true;
}

} // namespace mext
