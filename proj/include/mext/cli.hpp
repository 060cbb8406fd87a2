// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: gen-data / train / eval / sweep. Configuration
// precedence is built-in defaults < profile < config file < flags; unknown
// config keys are rejected. Exit codes: 0 success, 1 usage/configuration,
// 2 I/O, 3 numerical failure.
#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mext/harness.hpp"
#include "mext/model_io.hpp"

namespace mext {

struct CliConfig {
    std::string profile = "desk";
    ScenarioConfig scenario;
    TrainConfig train;
    std::vector<int> hidden = {64, 64, 128, 64, 32};
    double ratio = 0.125; // spatial compression ratio r = M/N
    std::int64_t num_samples = 20000;
    double split_ratio = 0.8;
    std::vector<double> sweep_values; // empty -> per-kind defaults
    int n_seeds = 1;
    int jobs = 1;
    std::optional<int> config_n_antennas; // set when the config file pins N
};

inline void apply_profile(CliConfig &cfg, const std::string &profile) {
    if (profile == "desk") {
        cfg.hidden = {64, 64, 128, 64, 32};
        cfg.train.n_iter = 5000;
    } else if (profile == "paper") {
        cfg.hidden = {1024, 1024, 2048, 1024, 512};
        cfg.train.n_iter = 50000;
    } else {
        throw std::invalid_argument("unknown profile: '" + profile + "' (expected 'desk' or 'paper')");
    }
    cfg.profile = profile;
}

inline nlohmann::json cli_config_defaults_json() {
    CliConfig cfg;
    return nlohmann::json{{"profile", cfg.profile},
                          {"scenario", scenario_to_json(cfg.scenario)},
                          {"train", train_config_to_json(cfg.train)},
                          {"data", {{"num_samples", cfg.num_samples}, {"split_ratio", cfg.split_ratio}}},
                          {"model", {{"hidden", cfg.hidden}, {"ratio", cfg.ratio}}},
                          {"sweep", {{"values", cfg.sweep_values}, {"n_seeds", cfg.n_seeds}, {"jobs", cfg.jobs}}}};
}

// Loads a config file over cfg. The profile key is applied first (unless a
// --profile flag already fixed it), each explicit key then overrides.
inline void load_config_file(CliConfig &cfg, const std::string &path, const std::optional<std::string> &profile_flag) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception &e) {
        throw io_error("bad config file " + path + ": " + e.what());
    }
    static const char *known[] = {"profile", "scenario", "train", "data", "model", "sweep"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char *k : known)
            ok = ok || it.key() == k;
        if (!ok)
            throw std::invalid_argument("unknown config key: '" + it.key() + "'");
    }
    if (profile_flag)
        apply_profile(cfg, *profile_flag);
    else if (j.contains("profile"))
        apply_profile(cfg, j.at("profile").get<std::string>());
    if (j.contains("scenario")) {
        cfg.scenario = scenario_from_json(j.at("scenario"), cfg.scenario);
        if (j.at("scenario").contains("n_antennas"))
            cfg.config_n_antennas = cfg.scenario.n_antennas;
    }
    if (j.contains("train"))
        cfg.train = train_config_from_json(j.at("train"), cfg.train);
    if (j.contains("data")) {
        const auto &d = j.at("data");
        for (auto it = d.begin(); it != d.end(); ++it)
            if (it.key() != "num_samples" && it.key() != "split_ratio")
                throw std::invalid_argument("unknown data key: '" + it.key() + "'");
        if (d.contains("num_samples"))
            cfg.num_samples = d.at("num_samples").get<std::int64_t>();
        if (d.contains("split_ratio"))
            cfg.split_ratio = d.at("split_ratio").get<double>();
    }
    if (j.contains("model")) {
        const auto &m = j.at("model");
        for (auto it = m.begin(); it != m.end(); ++it)
            if (it.key() != "hidden" && it.key() != "ratio")
                throw std::invalid_argument("unknown model key: '" + it.key() + "'");
        if (m.contains("hidden"))
            cfg.hidden = m.at("hidden").get<std::vector<int>>();
        if (m.contains("ratio"))
            cfg.ratio = m.at("ratio").get<double>();
    }
    if (j.contains("sweep")) {
        const auto &s = j.at("sweep");
        for (auto it = s.begin(); it != s.end(); ++it)
            if (it.key() != "values" && it.key() != "n_seeds" && it.key() != "jobs")
                throw std::invalid_argument("unknown sweep key: '" + it.key() + "'");
        if (s.contains("values"))
            cfg.sweep_values = s.at("values").get<std::vector<double>>();
        if (s.contains("n_seeds"))
            cfg.n_seeds = s.at("n_seeds").get<int>();
        if (s.contains("jobs"))
            cfg.jobs = s.at("jobs").get<int>();
    }
}

namespace detail {

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> geometry;
    std::optional<std::string> profile;
    std::optional<std::int64_t> num_samples;
    std::optional<double> ratio;
    std::optional<double> split;
    std::optional<int> jobs;
    std::optional<int> seeds;

    // Resolution order: defaults < profile < config file < flags.
    CliConfig resolve() const {
        CliConfig cfg;
        if (config_path)
            load_config_file(cfg, *config_path, profile);
        else if (profile)
            apply_profile(cfg, *profile);
        if (seed) {
            cfg.scenario.rng_seed = *seed;
            cfg.train.seed = *seed;
        }
        if (geometry)
            cfg.scenario.geometry = geometry_kind_from_string(*geometry);
        if (num_samples)
            cfg.num_samples = *num_samples;
        if (ratio)
            cfg.ratio = *ratio;
        if (split)
            cfg.split_ratio = *split;
        if (jobs)
            cfg.jobs = *jobs;
        if (seeds)
            cfg.n_seeds = *seeds;
        return cfg;
    }
};

inline void add_common_flags(CLI::App *cmd, CommonFlags &f) {
    cmd->add_option("--config", f.config_path, "JSON config file (see --help footer for the schema defaults)");
    cmd->add_option("--seed", f.seed, "master seed for dataset generation and training")
        ->envname("MEXT_SEED");
    cmd->add_option("--geometry", f.geometry, "array geometry: ula or nula (default nula)")
        ->check(CLI::IsMember({"ula", "nula"}));
    cmd->add_option("--profile", f.profile, "size profile: desk (default) or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
}

inline void write_trace_csv(const std::string &path, const TrainResult &res) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw io_error("cannot open trace file for writing: " + path);
    out << "iteration,loss,mse,entropy,tau,eval_mse\n";
    std::size_t e = 0;
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        const auto &row = res.trace[i];
        out << (i + 1) << ',' << fmt_double(row.total) << ',' << fmt_double(row.mse) << ',' << fmt_double(row.entropy)
            << ',' << fmt_double(row.tau) << ',';
        if (e < res.evals.size() && res.evals[e].iteration == static_cast<int>(i + 1)) {
            out << fmt_double(res.evals[e].mse);
            ++e;
        }
        out << "\n";
    }
    if (!out)
        throw io_error("failed writing trace file: " + path);
}

inline std::uint64_t dataset_seed_for_split(const std::string &dataset_path) {
    ScenarioConfig side;
    if (!read_sidecar(dataset_path, side))
        throw io_error("dataset sidecar " + sidecar_path(dataset_path) +
                       " is required to derive the train/test split");
    return side.rng_seed;
}

inline int cmd_gen_data(const CliConfig &cfg, const std::string &out_path) {
    validate(cfg.scenario);
    const Dataset ds = synth_dataset(cfg.scenario, cfg.num_samples);
    write_dataset(out_path, ds, cfg.scenario);
    std::cout << "wrote " << out_path << " (" << ds.num_samples() << " samples, N=" << ds.n << ") and "
              << sidecar_path(out_path) << "\n";
    return 0;
}

inline int cmd_train(const CliConfig &cfg, const std::string &dataset_path, const std::string &model_out) {
    const Dataset full = read_dataset(dataset_path);
    if (cfg.config_n_antennas && *cfg.config_n_antennas != full.n)
        throw std::invalid_argument("config n_antennas=" + std::to_string(*cfg.config_n_antennas) +
                                    " does not match dataset N=" + std::to_string(full.n));
    const std::uint64_t split_seed = dataset_seed_for_split(dataset_path);
    auto [train_set, test_set] = split_dataset(full, cfg.split_ratio, split_seed);
    const int m = antennas_from_ratio(cfg.ratio, full.n);
    const auto specs = make_layer_specs(2 * m, cfg.hidden, 2 * full.n);
    TrainOptions options;
    options.eval_set = &test_set;
    options.log = &std::cerr;
    const TrainResult res = train(train_set, cfg.train, specs, options);
    save_model(model_out, res.model);
    write_trace_csv(model_out + ".trace.csv", res);
    std::cout << "final_test_mse=" << fmt_double(res.model.final_mse) << "\n";
    std::cout << "selected_indices=" << join_indices_1based(res.model.selected_indices) << "\n";
    return 0;
}

inline int cmd_eval(const CliConfig &cfg, const std::string &model_path, const std::string &dataset_path,
                    const std::optional<std::string> &csv_out, bool full_set) {
    const TrainedModel model = load_model(model_path);
    const Dataset full = read_dataset(dataset_path);
    if (full.n != model.n)
        throw std::invalid_argument("dataset N=" + std::to_string(full.n) + " does not match model N=" +
                                    std::to_string(model.n));
    Dataset target;
    if (full_set) {
        target = full;
    } else {
        auto [train_set, test_set] = split_dataset(full, cfg.split_ratio, dataset_seed_for_split(dataset_path));
        target = std::move(test_set);
    }
    const double mse = evaluate(model, target);
    if (csv_out) {
        std::ofstream out(*csv_out, std::ios::trunc);
        if (!out)
            throw io_error("cannot open eval csv for writing: " + *csv_out);
        out << "sample,squared_error_over_n\n";
        for (std::int64_t i = 0; i < target.num_samples(); ++i) {
            Dataset one;
            one.n = target.n;
            one.f_uplink = target.f_uplink;
            one.f_downlink = target.f_downlink;
            one.uplink.assign(target.up(i).begin(), target.up(i).end());
            one.downlink.assign(target.down(i).begin(), target.down(i).end());
            out << i << ',' << fmt_double(evaluate(model, one)) << "\n";
        }
    }
    std::cout << fmt_double(mse) << "\n";
    return 0;
}

inline int cmd_sweep(const CliConfig &cfg, const std::string &kind_str, const std::string &out_csv) {
    SweepSpec spec;
    spec.kind = sweep_kind_from_string(kind_str);
    spec.scenario = cfg.scenario;
    spec.train = cfg.train;
    spec.hidden = cfg.hidden;
    spec.ratio = cfg.ratio;
    spec.num_samples = cfg.num_samples;
    spec.split_ratio = cfg.split_ratio;
    spec.n_seeds = cfg.n_seeds;
    spec.jobs = cfg.jobs;
    if (!cfg.sweep_values.empty()) {
        spec.values = cfg.sweep_values;
    } else {
        switch (spec.kind) {
        case SweepKind::CompressionRatio:
            spec.values = {1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0};
            break;
        case SweepKind::FrequencyGap:
            for (int k : {17, 33, 49, 62})
                spec.values.push_back(downlink_subcarrier_frequency(k));
            break;
        case SweepKind::UplinkNoise:
            spec.values = {0.01, 0.1, 0.5, 1.0};
            break;
        }
    }
    const ExperimentResult result = run_sweep(spec);
    export_results(result, out_csv);
    std::ofstream echo(out_csv + ".spec.json", std::ios::trunc);
    if (!echo)
        throw io_error("cannot open spec echo for writing: " + out_csv + ".spec.json");
    echo << sweep_spec_to_json(spec).dump(2) << "\n";
    int failed = 0;
    for (const auto &row : result.rows)
        if (!std::isfinite(row.test_mse))
            ++failed;
    std::cout << "wrote " << out_csv << " (" << result.rows.size() << " rows";
    if (failed)
        std::cout << ", " << failed << " failed cells";
    std::cout << ")\n";
    return 0;
}

} // namespace detail

inline int run_cli(int argc, const char *const *argv) {
    CLI::App app{"mext: learned antenna subsampling and uplink-to-downlink channel extrapolation"};
    app.require_subcommand(1);
    app.footer("Config file defaults:\n" + cli_config_defaults_json().dump(2));

    detail::CommonFlags gen_flags, train_flags, eval_flags, sweep_flags;

    auto *gen = app.add_subcommand("gen-data", "generate a synthetic channel dataset (binary + JSON sidecar)");
    std::string gen_out;
    detail::add_common_flags(gen, gen_flags);
    gen->add_option("--out", gen_out, "output dataset path")->required();
    gen->add_option("--num-samples", gen_flags.num_samples, "number of channel pairs (default 20000)");

    auto *tr = app.add_subcommand("train", "train selection logits and extrapolation network on a dataset");
    std::string train_dataset, train_out;
    detail::add_common_flags(tr, train_flags);
    tr->add_option("dataset", train_dataset, "dataset file from gen-data")->required();
    tr->add_option("--out", train_out, "output model JSON path")->required();
    tr->add_option("--ratio", train_flags.ratio, "spatial compression ratio r = M/N (default 0.125)");
    tr->add_option("--split", train_flags.split, "train/test split ratio (default 0.8)");

    auto *ev = app.add_subcommand("eval", "evaluate a model file on a dataset (test split by default)");
    std::string eval_model, eval_dataset;
    std::optional<std::string> eval_csv;
    bool eval_full = false;
    detail::add_common_flags(ev, eval_flags);
    ev->add_option("model", eval_model, "model JSON file")->required();
    ev->add_option("dataset", eval_dataset, "dataset file")->required();
    ev->add_option("--out", eval_csv, "optional per-sample error CSV");
    ev->add_option("--split", eval_flags.split, "train/test split ratio used at train time (default 0.8)");
    ev->add_flag("--full", eval_full, "evaluate on the entire dataset instead of the test split");

    auto *sw = app.add_subcommand("sweep", "run an experiment sweep and export CSV results");
    std::string sweep_kind, sweep_out;
    detail::add_common_flags(sw, sweep_flags);
    sw->add_option("kind", sweep_kind, "sweep kind: r (compression ratio), gap (downlink subcarrier), noise")
        ->required()
        ->check(CLI::IsMember({"r", "gap", "noise"}));
    sw->add_option("--out", sweep_out, "output CSV path")->required();
    sw->add_option("--num-samples", sweep_flags.num_samples, "dataset size per cell (default 20000)");
    sw->add_option("--ratio", sweep_flags.ratio, "compression ratio for gap/noise sweeps (default 0.125)");
    sw->add_option("--seeds", sweep_flags.seeds, "seed repeats per cell (default 1)");
    sw->add_option("--jobs", sweep_flags.jobs, "parallel sweep workers (default 1)");

    try {
        app.parse(argc, argv);
        if (gen->parsed())
            return detail::cmd_gen_data(gen_flags.resolve(), gen_out);
        if (tr->parsed())
            return detail::cmd_train(train_flags.resolve(), train_dataset, train_out);
        if (ev->parsed())
            return detail::cmd_eval(eval_flags.resolve(), eval_model, eval_dataset, eval_csv, eval_full);
        if (sw->parsed())
            return detail::cmd_sweep(sweep_flags.resolve(), sweep_kind, sweep_out);
        return 1;
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 1;
    } catch (const numeric_error &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const io_error &e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run_cli(const std::vector<std::string> &args) {
    std::vector<const char *> argv;
    argv.push_back("mext");
    for (const auto &a : args)
        argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace mext
