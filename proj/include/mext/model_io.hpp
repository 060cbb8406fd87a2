// SPDX-License-Identifier: Apache-2.0
//
// JSON model files. Doubles are serialized in shortest round-trip decimal,
// so save -> load -> save is byte-identical.
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mext/errors.hpp"
#include "mext/trainer.hpp"

namespace mext {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json train_config_to_json(const TrainConfig &c) {
    return nlohmann::json{{"n_iter", c.n_iter},
                          {"batch_size", c.batch_size},
                          {"eta_zeta", c.eta_zeta},
                          {"eta_omega", c.eta_omega},
                          {"rho", c.rho},
                          {"tau_start", c.tau_start},
                          {"tau_end", c.tau_end},
                          {"adam_beta1", c.adam_beta1},
                          {"adam_beta2", c.adam_beta2},
                          {"adam_eps", c.adam_eps},
                          {"seed", c.seed},
                          {"logit_beta", c.logit_beta},
                          {"logit_gamma_std", c.logit_gamma_std},
                          {"eval_every", c.eval_every}};
}

inline TrainConfig train_config_from_json(const nlohmann::json &j, TrainConfig c = {}) {
    static const char *known[] = {"n_iter",     "batch_size", "eta_zeta",  "eta_omega",       "rho",
                                  "tau_start",  "tau_end",    "adam_beta1", "adam_beta2",      "adam_eps",
                                  "seed",       "logit_beta", "logit_gamma_std", "eval_every"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char *k : known)
            ok = ok || it.key() == k;
        if (!ok)
            throw std::invalid_argument("unknown train key: '" + it.key() + "'");
    }
    if (j.contains("n_iter"))
        c.n_iter = j.at("n_iter").get<int>();
    if (j.contains("batch_size"))
        c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("eta_zeta"))
        c.eta_zeta = j.at("eta_zeta").get<double>();
    if (j.contains("eta_omega"))
        c.eta_omega = j.at("eta_omega").get<double>();
    if (j.contains("rho"))
        c.rho = j.at("rho").get<double>();
    if (j.contains("tau_start"))
        c.tau_start = j.at("tau_start").get<double>();
    if (j.contains("tau_end"))
        c.tau_end = j.at("tau_end").get<double>();
    if (j.contains("adam_beta1"))
        c.adam_beta1 = j.at("adam_beta1").get<double>();
    if (j.contains("adam_beta2"))
        c.adam_beta2 = j.at("adam_beta2").get<double>();
    if (j.contains("adam_eps"))
        c.adam_eps = j.at("adam_eps").get<double>();
    if (j.contains("seed"))
        c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("logit_beta"))
        c.logit_beta = j.at("logit_beta").get<double>();
    if (j.contains("logit_gamma_std"))
        c.logit_gamma_std = j.at("logit_gamma_std").get<double>();
    if (j.contains("eval_every"))
        c.eval_every = j.at("eval_every").get<int>();
    return c;
}

inline nlohmann::json model_to_json(const TrainedModel &model) {
    nlohmann::json layers = nlohmann::json::array();
    nlohmann::json specs = nlohmann::json::array();
    for (const auto &l : model.network.layers) {
        specs.push_back({{"in_dim", l.w.cols}, {"out_dim", l.w.rows}, {"activation", to_string(l.activation)}});
        layers.push_back({{"weights", l.w.a}, {"biases", l.b}});
    }
    std::vector<int> indices_1based;
    for (int idx : model.selected_indices)
        indices_1based.push_back(idx + 1);
    nlohmann::json j{{"format_version", kModelFormatVersion},
                     {"N", model.n},
                     {"M", model.m},
                     {"r", static_cast<double>(model.m) / static_cast<double>(model.n)},
                     {"layer_specs", specs},
                     {"logits", model.logits.values.a},
                     {"layers", layers},
                     {"selected_indices", indices_1based},
                     {"train_config", train_config_to_json(model.config)},
                     {"seed", model.config.seed}};
    if (std::isfinite(model.final_mse))
        j["final_mse"] = model.final_mse;
    else
        j["final_mse"] = nullptr;
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json &j) {
    TrainedModel model;
    if (j.at("format_version").get<int>() != kModelFormatVersion)
        throw io_error("unsupported model format version");
    model.n = j.at("N").get<int>();
    model.m = j.at("M").get<int>();
    if (model.n < 2 || model.m < 1 || model.m >= model.n)
        throw io_error("model file: invalid dimensions");
    const auto &specs = j.at("layer_specs");
    const auto &layers = j.at("layers");
    if (specs.size() != layers.size() || specs.empty())
        throw io_error("model file: layer_specs and layers disagree");
    for (std::size_t l = 0; l < specs.size(); ++l) {
        NetworkParams::Layer layer;
        const int in = specs[l].at("in_dim").get<int>();
        const int out = specs[l].at("out_dim").get<int>();
        layer.activation = activation_from_string(specs[l].at("activation").get<std::string>());
        layer.w = Mat(out, in);
        const auto w = layers[l].at("weights").get<std::vector<double>>();
        if (w.size() != layer.w.a.size())
            throw io_error("model file: weight matrix size mismatch");
        layer.w.a = w;
        layer.b = layers[l].at("biases").get<std::vector<double>>();
        if (static_cast<int>(layer.b.size()) != out)
            throw io_error("model file: bias vector size mismatch");
        model.network.layers.push_back(std::move(layer));
    }
    validate(model.network.specs());
    if (model.network.in_dim() != 2 * model.m || model.network.out_dim() != 2 * model.n)
        throw io_error("model file: network dimensions do not match N/M");
    model.logits.values = Mat(model.m, model.n);
    const auto lg = j.at("logits").get<std::vector<double>>();
    if (lg.size() != model.logits.values.a.size())
        throw io_error("model file: logits size mismatch");
    model.logits.values.a = lg;
    const auto idx1 = j.at("selected_indices").get<std::vector<int>>();
    if (static_cast<int>(idx1.size()) != model.m)
        throw io_error("model file: selected_indices size mismatch");
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(model.n), 0);
    for (int v : idx1) {
        if (v < 1 || v > model.n || seen[static_cast<std::size_t>(v - 1)])
            throw io_error("model file: selected_indices must be distinct and in [1, N]");
        seen[static_cast<std::size_t>(v - 1)] = 1;
        model.selected_indices.push_back(v - 1);
    }
    model.config = train_config_from_json(j.at("train_config"));
    if (j.contains("final_mse") && !j.at("final_mse").is_null())
        model.final_mse = j.at("final_mse").get<double>();
    return model;
}

inline void save_model(const std::string &path, const TrainedModel &model) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw io_error("cannot open model file for writing: " + path);
    out << model_to_json(model).dump(2) << "\n";
    if (!out)
        throw io_error("failed writing model file: " + path);
}

inline TrainedModel load_model(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        return model_from_json(j);
    } catch (const io_error &) {
        throw;
    } catch (const std::exception &e) {
        throw io_error("bad model file " + path + ": " + e.what());
    }
}

} // namespace mext
