// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: dataset generation with a seeded train/test split, the
// uniform-selection baseline, and the three sweeps (compression ratio,
// downlink frequency gap, uplink noise) with CSV export.
//
// Seeding layout per sweep cell (value v, seed repeat j, method):
//   dataset paths   <- mix(scenario.rng_seed, kSeedRepeat, j)
//   uplink noise    <- same per-repeat seed, scaled by the cell's variance
//   training        <- mix(train.seed, kSeedRepeat, j)
// Values within a repeat therefore share datasets, noise draws and network
// initialization (common random numbers), and both methods of a cell differ
// only in the selection mechanism. Cells stay independent, so they can run
// on parallel workers with bit-reproducible results.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mext/dataset.hpp"
#include "mext/errors.hpp"
#include "mext/model_io.hpp"
#include "mext/text.hpp"
#include "mext/trainer.hpp"

namespace mext {

// Generates paired samples from the scenario and splits them train/test by a
// seeded shuffle (default ratio 0.8, i.e. 4:1).
inline std::pair<Dataset, Dataset> generate_dataset(const ScenarioConfig &scenario, std::int64_t num_samples,
                                                    double split_ratio = 0.8) {
    if (num_samples < 5)
        throw std::invalid_argument("generate_dataset: need at least 5 samples");
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw std::invalid_argument("generate_dataset: split ratio must lie in (0, 1)");
    Dataset full = synth_dataset(scenario, num_samples);
    return split_dataset(full, split_ratio, scenario.rng_seed);
}

// Equally spaced antennas: 1-based round(k*n/m) for k = 1..m, stored 0-based.
inline std::vector<int> uniform_baseline_indices(int m, int n) {
    if (m < 1 || m > n)
        throw std::invalid_argument("uniform_baseline_indices: need 1 <= m <= n");
    std::vector<int> out(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
        long idx = std::lround(static_cast<double>(k) * n / m);
        idx = std::max(1L, std::min(static_cast<long>(n), idx));
        out[static_cast<std::size_t>(k - 1)] = static_cast<int>(idx) - 1;
    }
    return out;
}

enum class SweepKind { CompressionRatio, FrequencyGap, UplinkNoise };

inline std::string to_string(SweepKind k) {
    switch (k) {
    case SweepKind::CompressionRatio: return "r";
    case SweepKind::FrequencyGap: return "gap";
    default: return "noise";
    }
}

inline SweepKind sweep_kind_from_string(const std::string &s) {
    if (s == "r")
        return SweepKind::CompressionRatio;
    if (s == "gap")
        return SweepKind::FrequencyGap;
    if (s == "noise")
        return SweepKind::UplinkNoise;
    throw std::invalid_argument("unknown sweep kind: '" + s + "' (expected r, gap or noise)");
}

// Downlink subcarrier k of the 20 MHz / 64-subcarrier OFDM grid at 2.5 GHz;
// the uplink sits on the first 2.4 GHz subcarrier.
inline double downlink_subcarrier_frequency(int k, double base = 2.5e9, double bandwidth = 20e6, int n_subcarriers = 64) {
    return base + (k - 1) * (bandwidth / n_subcarriers);
}

struct SweepSpec {
    SweepKind kind = SweepKind::CompressionRatio;
    std::vector<double> values;             // r values, downlink frequencies (Hz), or noise variances
    ScenarioConfig scenario;                // geometry kind lives here
    TrainConfig train;
    std::vector<int> hidden = {64, 64, 128, 64, 32};
    double ratio = 0.125;                   // r used by gap/noise sweeps
    std::int64_t num_samples = 20000;
    double split_ratio = 0.8;
    int n_seeds = 1;
    int jobs = 1;
};

inline void validate(const SweepSpec &spec) {
    if (spec.values.empty())
        throw std::invalid_argument("sweep: values must be non-empty");
    validate(spec.scenario);
    validate(spec.train);
    if (spec.n_seeds < 1)
        throw std::invalid_argument("sweep: n_seeds must be >= 1");
    if (spec.jobs < 1)
        throw std::invalid_argument("sweep: jobs must be >= 1");
    if (spec.num_samples < 5)
        throw std::invalid_argument("sweep: num_samples must be >= 5");
    if (!(spec.split_ratio > 0.0 && spec.split_ratio < 1.0))
        throw std::invalid_argument("sweep: split ratio must lie in (0, 1)");
}

// Converts a compression ratio to an antenna count, requiring r*N integral.
inline int antennas_from_ratio(double r, int n) {
    if (!(r > 0.0 && r < 1.0))
        throw std::invalid_argument("compression ratio must lie in (0, 1)");
    const double exact = r * n;
    const int m = static_cast<int>(std::lround(exact));
    if (std::abs(exact - m) > 1e-9 || m < 1)
        throw std::invalid_argument("compression ratio " + fmt_double(r) + " does not give an integer antenna count for N=" +
                                    std::to_string(n));
    return m;
}

struct ResultRow {
    std::string sweep_kind;
    double sweep_value = 0.0;
    std::string method;   // "proposed" or "uniform"
    std::string geometry; // "ula" or "nula"
    double test_mse = std::numeric_limits<double>::quiet_NaN(); // NaN => failed cell ("NA" in CSV)
    std::vector<int> selected_indices; // 0-based
    std::uint64_t seed = 0;            // derived per-repeat training seed
    double seconds = 0.0;              // wall clock, not reproducible across runs
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
};

namespace detail {

struct SweepCell {
    int value_index = 0;
    int seed_index = 0;
    bool uniform = false;
};

inline ResultRow run_sweep_cell(const SweepSpec &spec, const SweepCell &cell) {
    const double value = spec.values[static_cast<std::size_t>(cell.value_index)];
    ResultRow row;
    row.sweep_kind = to_string(spec.kind);
    row.sweep_value = value;
    row.method = cell.uniform ? "uniform" : "proposed";
    row.geometry = to_string(spec.scenario.geometry);

    const auto t0 = std::chrono::steady_clock::now();
    try {
        ScenarioConfig scenario = spec.scenario;
        scenario.rng_seed = mix_seed(spec.scenario.rng_seed, stream::kSeedRepeat, static_cast<std::uint64_t>(cell.seed_index));
        double r = spec.ratio;
        double noise_variance = 0.0;
        switch (spec.kind) {
        case SweepKind::CompressionRatio:
            r = value;
            break;
        case SweepKind::FrequencyGap:
            scenario.f_downlink = value;
            break;
        case SweepKind::UplinkNoise:
            if (value < 0.0)
                throw std::invalid_argument("noise variance must be non-negative");
            noise_variance = value;
            break;
        }
        const int n = scenario.n_antennas;
        const int m = antennas_from_ratio(r, n);

        Dataset full = synth_dataset(scenario, spec.num_samples);
        if (noise_variance > 0.0)
            add_uplink_noise(full, noise_variance, scenario.rng_seed);
        auto [train_set, test_set] = split_dataset(full, spec.split_ratio, scenario.rng_seed);

        TrainConfig cfg = spec.train;
        cfg.seed = mix_seed(spec.train.seed, stream::kSeedRepeat, static_cast<std::uint64_t>(cell.seed_index));
        row.seed = cfg.seed;

        TrainOptions options;
        if (cell.uniform)
            options.fixed_indices = uniform_baseline_indices(m, n);
        const auto specs = make_layer_specs(2 * m, spec.hidden, 2 * n);
        TrainResult res = train(train_set, cfg, specs, options);
        row.test_mse = evaluate(res.model, test_set);
        row.selected_indices = res.model.selected_indices;
    } catch (const std::exception &) {
        // Failed cells are recorded as NA; the sweep continues.
        row.test_mse = std::numeric_limits<double>::quiet_NaN();
        row.selected_indices.clear();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

} // namespace detail

// Runs every (value, seed repeat, method) cell; cell order in the result is
// value-major, then seed, then proposed/uniform. Cells are independent and
// are distributed over spec.jobs workers.
inline ExperimentResult run_sweep(const SweepSpec &spec) {
    validate(spec);
    std::vector<detail::SweepCell> cells;
    for (int v = 0; v < static_cast<int>(spec.values.size()); ++v)
        for (int j = 0; j < spec.n_seeds; ++j)
            for (int u = 0; u < 2; ++u)
                cells.push_back({v, j, u == 1});

    ExperimentResult result;
    result.rows.resize(cells.size());
    const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(cells.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            result.rows[i] = detail::run_sweep_cell(spec, cells[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size())
                        return;
                    result.rows[i] = detail::run_sweep_cell(spec, cells[i]);
                }
            });
        for (auto &t : workers)
            t.join();
    }
    return result;
}

inline nlohmann::json sweep_spec_to_json(const SweepSpec &spec) {
    return nlohmann::json{{"kind", to_string(spec.kind)},
                          {"values", spec.values},
                          {"scenario", scenario_to_json(spec.scenario)},
                          {"train", train_config_to_json(spec.train)},
                          {"hidden", spec.hidden},
                          {"ratio", spec.ratio},
                          {"num_samples", spec.num_samples},
                          {"split_ratio", spec.split_ratio},
                          {"n_seeds", spec.n_seeds},
                          {"jobs", spec.jobs}};
}

inline constexpr const char *kResultsCsvHeader = "sweep_kind,sweep_value,method,geometry,test_mse,selected_indices,seed,seconds";

// CSV rows in shortest round-trip decimals; failed cells carry "NA" in the
// test_mse column; indices are a semicolon-joined 1-based list.
inline void export_results(const ExperimentResult &result, const std::string &path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw io_error("cannot open results file for writing: " + path);
    out << kResultsCsvHeader << "\n";
    for (const auto &row : result.rows) {
        out << row.sweep_kind << ',' << fmt_double(row.sweep_value) << ',' << row.method << ',' << row.geometry << ','
            << (std::isfinite(row.test_mse) ? fmt_double(row.test_mse) : std::string("NA")) << ','
            << join_indices_1based(row.selected_indices) << ',' << row.seed << ',' << fmt_double(row.seconds) << "\n";
    }
    if (!out)
        throw io_error("failed writing results file: " + path);
}

inline ExperimentResult parse_results(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open results file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kResultsCsvHeader)
        throw io_error("bad results header in " + path);
    ExperimentResult result;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8)
            throw io_error("bad results row in " + path + ": '" + line + "'");
        ResultRow row;
        row.sweep_kind = f[0];
        row.sweep_value = parse_double(f[1]);
        row.method = f[2];
        row.geometry = f[3];
        row.test_mse = f[4] == "NA" ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[4]);
        row.selected_indices = split_indices_1based(f[5]);
        row.seed = parse_u64(f[6]);
        row.seconds = parse_double(f[7]);
        result.rows.push_back(std::move(row));
    }
    return result;
}

} // namespace mext
