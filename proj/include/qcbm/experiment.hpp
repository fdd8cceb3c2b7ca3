// Copyright 2026 The QCBM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Experiment configuration, the five experiment runners and report
 * comparison.
 *
 * A run produces a deterministic report.json (no wall-clock data), a
 * metadata.json with timings, histogram CSVs, the checkpoint and traces.
 */

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qcbm/baseline.hpp"
#include "qcbm/born.hpp"
#include "qcbm/circuits.hpp"
#include "qcbm/data.hpp"
#include "qcbm/io.hpp"
#include "qcbm/metrics.hpp"
#include "qcbm/noise.hpp"
#include "qcbm/optimize.hpp"

#ifndef QCBM_VERSION
#define QCBM_VERSION "unknown"
#endif

namespace qcbm {

inline constexpr const char *kVersion = QCBM_VERSION;
inline constexpr std::array<const char *, kNumFeatures> kFeatureNames{"e_out", "pt", "eta"};

enum class ExperimentKind { exp_1d, exp_multi, exp_cond, exp_blocks, exp_noise };

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::exp_1d:
        return "exp-1d";
    case ExperimentKind::exp_multi:
        return "exp-multi";
    case ExperimentKind::exp_cond:
        return "exp-cond";
    case ExperimentKind::exp_blocks:
        return "exp-blocks";
    case ExperimentKind::exp_noise:
        return "exp-noise";
    }
    return "?";
}

inline ExperimentKind experiment_from_string(std::string_view s) {
    for (auto k : {ExperimentKind::exp_1d, ExperimentKind::exp_multi, ExperimentKind::exp_cond,
                   ExperimentKind::exp_blocks, ExperimentKind::exp_noise}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw ConfigError("experiment: unknown value '" + std::string(s) +
                      "' (expected exp-1d, exp-multi, exp-cond, exp-blocks or exp-noise)");
}

inline std::string_view to_string(InitScheme s) {
    switch (s) {
    case InitScheme::zeros:
        return "zeros";
    case InitScheme::uniform_0_2pi:
        return "uniform_0_2pi";
    case InitScheme::small_normal:
        return "small_normal";
    }
    return "?";
}

inline std::string_view to_string(OptimizerKind k) {
    switch (k) {
    case OptimizerKind::adam:
        return "adam";
    case OptimizerKind::spsa:
        return "spsa";
    case OptimizerKind::mixed:
        return "mixed";
    }
    return "?";
}

struct DataSettings {
    std::string source{"synthetic"};
    std::string csv_path;
    /// Events per incoming energy before the train/test split.
    std::size_t n_events{10240};
    /// Single-energy experiments.
    double energy{125.0};
    /// Conditional experiment.
    std::vector<double> energies{50, 75, 100, 125, 150, 175, 200};
    std::vector<double> held_out{125};
    SynthParams synth;
};

struct CircuitSettings {
    std::vector<std::size_t> features{0};
    std::size_t qubits_per_feature{4};
    std::size_t repetitions{4};
    std::string block{"linear,1"};
    std::size_t layers{4};
    InitScheme init{InitScheme::uniform_0_2pi};
};

struct NoiseSettings {
    NoiseConfig config;
    /// Shots per noisy evaluation in exp-noise.
    std::size_t shots{100000};
    /// 0 builds the confusion matrix exactly; otherwise shots per calibration state.
    std::size_t calibration_shots{0};
};

struct GmmdSettings {
    bool enabled{false};
    MlpSpec spec;
    GmmdConfig config;
};

struct ExperimentConfig {
    ExperimentKind experiment{ExperimentKind::exp_1d};
    std::uint64_t seed{1};
    std::string output_dir;
    DataSettings data;
    CircuitSettings circuit;
    TrainConfig train;
    NoiseSettings noise;
    GmmdSettings gmmd;
    /// Sampling repetitions for histogram error bars.
    std::size_t sample_repetitions{10};
    /// Generated samples used for correlation estimates.
    std::size_t correlation_samples{100000};
    /// Parallel trainings in exp-blocks; 0 uses the hardware concurrency.
    std::size_t threads{0};
};

/// Defaults per experiment, before any file or flag values.
inline ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    c.output_dir = "runs/" + std::string(to_string(kind));
    switch (kind) {
    case ExperimentKind::exp_1d:
        c.data.energy = 50.0;
        c.circuit.features = {0};
        c.circuit.qubits_per_feature = 4;
        c.train.max_epochs = 70;
        c.gmmd.enabled = true;
        c.gmmd.spec = MlpSpec{15, {64, 128, 64, 16}, 1};
        c.gmmd.config.epochs = 200;
        break;
    case ExperimentKind::exp_multi:
    case ExperimentKind::exp_blocks:
        c.data.energy = 125.0;
        c.circuit.features = {0, 1, 2};
        c.circuit.qubits_per_feature = 3;
        c.circuit.repetitions = 4;
        c.train.max_epochs = 100;
        c.gmmd.enabled = kind == ExperimentKind::exp_multi;
        c.gmmd.spec = MlpSpec{15, {128, 256, 128}, 3};
        c.gmmd.config.epochs = 200;
        break;
    case ExperimentKind::exp_cond:
        c.circuit.features = {0};
        c.circuit.qubits_per_feature = 3;
        c.circuit.layers = 4;
        c.train.max_epochs = 30;
        break;
    case ExperimentKind::exp_noise:
        c.data.energy = 50.0;
        c.circuit.features = {0};
        c.circuit.qubits_per_feature = 4;
        c.train.max_epochs = 70;
        c.train.optimizer = OptimizerKind::mixed;
        break;
    }
    return c;
}

namespace detail {

class ConfigReader {
public:
    ConfigReader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(where() + ": expected an object");
        }
    }

    template <typename T>
    void read(const char *key, T &out) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception &e) {
            throw ConfigError(child(key) + ": " + e.what());
        }
    }

    template <typename F>
    void read_with(const char *key, F &&parse) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            parse(j_.at(key), child(key));
        } catch (const ConfigError &) {
            throw;
        } catch (const std::exception &e) {
            throw ConfigError(child(key) + ": " + e.what());
        }
    }

    void finish() const {
        for (const auto &[key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(child(key.c_str()) + ": unknown field");
            }
        }
    }

    [[nodiscard]] std::string child(const char *key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

private:
    [[nodiscard]] std::string where() const { return path_.empty() ? "config" : path_; }

    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline InitScheme init_from_string(const std::string &s) {
    for (auto k : {InitScheme::zeros, InitScheme::uniform_0_2pi, InitScheme::small_normal}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown init scheme '" + s + "'");
}

inline OptimizerKind optimizer_from_string(const std::string &s) {
    for (auto k : {OptimizerKind::adam, OptimizerKind::spsa, OptimizerKind::mixed}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown optimizer '" + s + "'");
}

inline void read_kernel(const json &j, const std::string &path, KernelConfig &k) {
    ConfigReader r(j, path);
    r.read("bandwidths", k.bandwidths);
    r.finish();
}

inline void read_noise_config(const json &j, const std::string &path, NoiseConfig &n) {
    ConfigReader r(j, path);
    r.read_with("readout_flip_prob", [&](const json &v, const std::string &) {
        n.readout_flip_prob = v.is_array() ? v.get<std::vector<double>>()
                                           : std::vector<double>{v.get<double>()};
    });
    r.read("cnot_depol_prob", n.cnot_depol_prob);
    r.read("trajectories", n.trajectories);
    r.finish();
}

inline void read_synth(const json &j, const std::string &path, SynthParams &p) {
    ConfigReader s(j, path);
    s.read("correlations", p.correlations);
    s.read("energy_fraction", p.energy_fraction);
    s.read("energy_log_width", p.energy_log_width);
    s.read("energy_drift", p.energy_drift);
    s.read("pt_log_location", p.pt_log_location);
    s.read("pt_log_width", p.pt_log_width);
    s.read("pt_log_slope", p.pt_log_slope);
    s.read("eta_location", p.eta_location);
    s.read("eta_width", p.eta_width);
    s.read("eta_slope", p.eta_slope);
    s.read("reference_energy", p.reference_energy);
    s.finish();
}

} // namespace detail

/**
 * Resolves a config: defaults for the named experiment, then the JSON
 * fields. Unknown fields and type errors raise ConfigError naming the
 * field path. `seed` is mandatory.
 */
inline ExperimentConfig config_from_json(const json &j) {
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    if (!j.contains("experiment")) {
        throw ConfigError("experiment: required field missing");
    }
    if (!j.contains("seed")) {
        throw ConfigError("seed: required field missing");
    }
    ExperimentConfig c;
    try {
        c = default_config(experiment_from_string(j.at("experiment").get<std::string>()));
    } catch (const json::exception &e) {
        throw ConfigError(std::string("experiment: ") + e.what());
    }
    detail::ConfigReader r(j, "");
    r.read_with("experiment", [](const json &, const std::string &) {});
    r.read("seed", c.seed);
    r.read("output_dir", c.output_dir);
    r.read("sample_repetitions", c.sample_repetitions);
    r.read("correlation_samples", c.correlation_samples);
    r.read("threads", c.threads);
    r.read_with("data", [&](const json &v, const std::string &path) {
        detail::ConfigReader d(v, path);
        d.read("source", c.data.source);
        d.read("csv_path", c.data.csv_path);
        d.read("n_events", c.data.n_events);
        d.read("energy", c.data.energy);
        d.read("energies", c.data.energies);
        d.read("held_out", c.data.held_out);
        d.read_with("synth", [&](const json &sv, const std::string &sp) {
            detail::read_synth(sv, sp, c.data.synth);
        });
        d.finish();
    });
    r.read_with("circuit", [&](const json &v, const std::string &path) {
        detail::ConfigReader d(v, path);
        d.read("features", c.circuit.features);
        d.read("qubits_per_feature", c.circuit.qubits_per_feature);
        d.read("repetitions", c.circuit.repetitions);
        d.read("block", c.circuit.block);
        d.read("layers", c.circuit.layers);
        d.read_with("init", [&](const json &iv, const std::string &) {
            c.circuit.init = detail::init_from_string(iv.get<std::string>());
        });
        d.finish();
    });
    r.read_with("train", [&](const json &v, const std::string &path) {
        detail::ConfigReader d(v, path);
        auto &t = c.train;
        d.read_with("optimizer", [&](const json &ov, const std::string &) {
            t.optimizer = detail::optimizer_from_string(ov.get<std::string>());
        });
        d.read("initial_lr", t.initial_lr);
        d.read("lr_halving_period", t.lr_halving_period);
        d.read("batches_per_epoch", t.batches_per_epoch);
        d.read("batch_size", t.batch_size);
        d.read("max_epochs", t.max_epochs);
        d.read("spsa_epochs", t.spsa_epochs);
        d.read("mitigate_readout", t.mitigate_readout);
        d.read("shot_mode", t.shot_mode);
        d.read_with("spsa", [&](const json &sv, const std::string &sp) {
            detail::ConfigReader s(sv, sp);
            s.read("a", t.spsa.a);
            s.read("c", t.spsa.c);
            s.read("alpha", t.spsa.alpha);
            s.read("gamma", t.spsa.gamma);
            s.finish();
        });
        d.read_with("kernel", [&](const json &kv, const std::string &kp) {
            detail::read_kernel(kv, kp, t.kernel);
        });
        d.finish();
    });
    r.read_with("noise", [&](const json &v, const std::string &path) {
        detail::ConfigReader d(v, path);
        d.read_with("model", [&](const json &mv, const std::string &mp) {
            detail::read_noise_config(mv, mp, c.noise.config);
        });
        d.read("shots", c.noise.shots);
        d.read("calibration_shots", c.noise.calibration_shots);
        d.finish();
    });
    r.read_with("gmmd", [&](const json &v, const std::string &path) {
        detail::ConfigReader d(v, path);
        d.read("enabled", c.gmmd.enabled);
        d.read("latent_dim", c.gmmd.spec.latent_dim);
        d.read("hidden", c.gmmd.spec.hidden);
        d.read("epochs", c.gmmd.config.epochs);
        d.read("batches_per_epoch", c.gmmd.config.batches_per_epoch);
        d.read("batch_size", c.gmmd.config.batch_size);
        d.read("learning_rate", c.gmmd.config.learning_rate);
        d.read_with("kernel", [&](const json &kv, const std::string &kp) {
            detail::read_kernel(kv, kp, c.gmmd.config.kernel);
        });
        d.finish();
    });
    r.finish();
    return c;
}

/// The fully resolved config, in the same shape config_from_json reads.
inline json config_to_json(const ExperimentConfig &c) {
    const auto &s = c.data.synth;
    const auto &t = c.train;
    return {
        {"experiment", to_string(c.experiment)},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"sample_repetitions", c.sample_repetitions},
        {"correlation_samples", c.correlation_samples},
        {"threads", c.threads},
        {"data",
         {{"source", c.data.source},
          {"csv_path", c.data.csv_path},
          {"n_events", c.data.n_events},
          {"energy", c.data.energy},
          {"energies", c.data.energies},
          {"held_out", c.data.held_out},
          {"synth",
           {{"correlations", s.correlations},
            {"energy_fraction", s.energy_fraction},
            {"energy_log_width", s.energy_log_width},
            {"energy_drift", s.energy_drift},
            {"pt_log_location", s.pt_log_location},
            {"pt_log_width", s.pt_log_width},
            {"pt_log_slope", s.pt_log_slope},
            {"eta_location", s.eta_location},
            {"eta_width", s.eta_width},
            {"eta_slope", s.eta_slope},
            {"reference_energy", s.reference_energy}}}}},
        {"circuit",
         {{"features", c.circuit.features},
          {"qubits_per_feature", c.circuit.qubits_per_feature},
          {"repetitions", c.circuit.repetitions},
          {"block", c.circuit.block},
          {"layers", c.circuit.layers},
          {"init", to_string(c.circuit.init)}}},
        {"train",
         {{"optimizer", to_string(t.optimizer)},
          {"initial_lr", t.initial_lr},
          {"lr_halving_period", t.lr_halving_period},
          {"batches_per_epoch", t.batches_per_epoch},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"spsa_epochs", t.spsa_epochs},
          {"mitigate_readout", t.mitigate_readout},
          {"shot_mode", t.shot_mode},
          {"spsa", {{"a", t.spsa.a}, {"c", t.spsa.c}, {"alpha", t.spsa.alpha}, {"gamma", t.spsa.gamma}}},
          {"kernel", {{"bandwidths", t.kernel.bandwidths}}}}},
        {"noise",
         {{"model",
           {{"readout_flip_prob", c.noise.config.readout_flip_prob},
            {"cnot_depol_prob", c.noise.config.cnot_depol_prob},
            {"trajectories", c.noise.config.trajectories}}},
          {"shots", c.noise.shots},
          {"calibration_shots", c.noise.calibration_shots}}},
        {"gmmd",
         {{"enabled", c.gmmd.enabled},
          {"latent_dim", c.gmmd.spec.latent_dim},
          {"hidden", c.gmmd.spec.hidden},
          {"epochs", c.gmmd.config.epochs},
          {"batches_per_epoch", c.gmmd.config.batches_per_epoch},
          {"batch_size", c.gmmd.config.batch_size},
          {"learning_rate", c.gmmd.config.learning_rate},
          {"kernel", {{"bandwidths", c.gmmd.config.kernel.bandwidths}}}}}};
}

/**
 * Applies a "dotted.path=value" override to a config document. The value
 * is parsed as JSON when possible and kept as a string otherwise.
 */
inline void apply_override(json &doc, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' must look like key.path=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    json *node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) {
            throw ConfigError("override '" + assignment + "' has an empty path component");
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        if (!node->contains(key)) {
            (*node)[key] = json::object();
        }
        node = &(*node)[key];
        if (!node->is_object()) {
            throw ConfigError(path.substr(0, dot) + ": cannot override inside a non-object");
        }
        start = dot + 1;
    }
}

/// Checks cross-field constraints and that referenced paths exist.
inline void validate_config(const ExperimentConfig &c) {
    if (c.data.source != "synthetic" && c.data.source != "csv") {
        throw ConfigError("data.source: expected 'synthetic' or 'csv'");
    }
    if (c.data.source == "csv" && !std::filesystem::exists(c.data.csv_path)) {
        throw ConfigError("data.csv_path: file '" + c.data.csv_path + "' does not exist");
    }
    if (c.data.source == "synthetic" && c.data.n_events < 4) {
        throw ConfigError("data.n_events: need at least 4 events");
    }
    if (c.circuit.features.empty()) {
        throw ConfigError("circuit.features: at least one feature required");
    }
    for (std::size_t f : c.circuit.features) {
        if (f >= kNumFeatures) {
            throw ConfigError("circuit.features: feature index " + std::to_string(f) + " out of range");
        }
    }
    if (c.circuit.qubits_per_feature == 0 ||
        c.circuit.qubits_per_feature * c.circuit.features.size() > 16) {
        throw ConfigError("circuit.qubits_per_feature: total qubits must lie in 1..16");
    }
    const bool multi = c.experiment == ExperimentKind::exp_multi || c.experiment == ExperimentKind::exp_blocks;
    if (multi && c.circuit.features.size() < 2) {
        throw ConfigError("circuit.features: multivariate experiments need at least two features");
    }
    if (!multi && c.circuit.features.size() != 1) {
        throw ConfigError("circuit.features: this experiment models exactly one feature");
    }
    if ((c.experiment == ExperimentKind::exp_1d || c.experiment == ExperimentKind::exp_noise) &&
        c.circuit.qubits_per_feature < 2) {
        throw ConfigError("circuit.qubits_per_feature: the RZZ ansatz needs at least two qubits");
    }
    try {
        (void)CorrelationBlockChoice::from_label(c.circuit.block);
    } catch (const std::exception &e) {
        throw ConfigError(std::string("circuit.block: ") + e.what());
    }
    if (c.experiment == ExperimentKind::exp_cond) {
        if (c.data.energies.size() < 2) {
            throw ConfigError("data.energies: need at least two energies");
        }
        const auto [lo, hi] = std::minmax_element(c.data.energies.begin(), c.data.energies.end());
        if (!(*lo < *hi)) {
            throw ConfigError("data.energies: need distinct energies");
        }
        std::size_t trained = 0;
        for (double e : c.data.energies) {
            trained += std::find(c.data.held_out.begin(), c.data.held_out.end(), e) == c.data.held_out.end();
        }
        if (trained == 0) {
            throw ConfigError("data.held_out: every energy is held out");
        }
        for (double e : c.data.held_out) {
            if (std::find(c.data.energies.begin(), c.data.energies.end(), e) == c.data.energies.end()) {
                throw ConfigError("data.held_out: " + std::to_string(e) + " is not among data.energies");
            }
        }
    }
    if (c.sample_repetitions == 0) {
        throw ConfigError("sample_repetitions: must be positive");
    }
    if (c.correlation_samples < 2) {
        throw ConfigError("correlation_samples: need at least two samples");
    }
    if (c.noise.shots == 0) {
        throw ConfigError("noise.shots: must be positive");
    }
    try {
        c.train.validate();
    } catch (const std::exception &e) {
        throw ConfigError(std::string("train: ") + e.what());
    }
    try {
        c.noise.config.validate();
    } catch (const std::exception &e) {
        throw ConfigError(std::string("noise.model: ") + e.what());
    }
    if (c.gmmd.enabled) {
        try {
            c.gmmd.config.validate();
            MlpSpec spec = c.gmmd.spec;
            spec.output_dim = c.circuit.features.size();
            spec.validate();
        } catch (const std::exception &e) {
            throw ConfigError(std::string("gmmd: ") + e.what());
        }
    }
}

/// Parameters for the synth-data verb.
struct SynthRequest {
    std::uint64_t seed{1};
    std::size_t n_events{10240};
    std::vector<double> energies{125};
    SynthParams params;
};

inline SynthRequest synth_request_from_json(const json &j) {
    if (!j.is_object() || !j.contains("seed")) {
        throw ConfigError("seed: required field missing");
    }
    SynthRequest r;
    detail::ConfigReader d(j, "");
    d.read("seed", r.seed);
    d.read("n_events", r.n_events);
    d.read("energies", r.energies);
    d.read_with("synth", [&](const json &v, const std::string &path) { detail::read_synth(v, path, r.params); });
    d.finish();
    if (r.n_events == 0 || r.energies.empty()) {
        throw ConfigError("n_events and energies must be non-empty");
    }
    return r;
}

/// Events for every requested energy, in request order.
inline std::vector<EventRecord> synthesize(const SynthRequest &r) {
    std::vector<EventRecord> out;
    for (std::size_t k = 0; k < r.energies.size(); ++k) {
        auto ev = synthesize_mfc(r.n_events, r.energies[k], correlation_matrix(r.params.correlations),
                                 detail::mix_seed(r.seed, k), r.params);
        out.insert(out.end(), ev.begin(), ev.end());
    }
    return out;
}

/// report.json, metadata.json and every other artifact, keyed by file name.
struct ReportBundle {
    json report;
    json metadata;
    std::map<std::string, std::string> files;
};

namespace detail {

/// Tags for seed streams derived from the master seed.
enum SeedTag : std::uint64_t {
    kDataSeed = 1,
    kSplitSeed = 2,
    kInitSeed = 3,
    kTrainSeed = 4,
    kSampleSeed = 5,
    kGmmdSeed = 6,
    kNoiseSeed = 7,
    kBlockSeed = 8,
};

inline std::uint64_t seed_for(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
    return mix_seed(mix_seed(master, tag), index);
}

inline std::vector<EventRecord> events_at(const ExperimentConfig &c, double energy,
                                          const std::vector<EventRecord> *csv) {
    if (csv) {
        std::vector<EventRecord> out;
        for (const auto &e : *csv) {
            if (std::abs(e.e_in - energy) < 1e-9) {
                out.push_back(e);
            }
        }
        if (out.size() < 2) {
            throw ConfigError("data.csv_path: fewer than two events at E_in = " + std::to_string(energy));
        }
        return out;
    }
    const auto tag = static_cast<std::uint64_t>(std::llround(energy * 1000.0));
    return synthesize_mfc(c.data.n_events, energy, correlation_matrix(c.data.synth.correlations),
                          seed_for(c.seed, kDataSeed, tag), c.data.synth);
}

/// Train/test halves of one energy, preprocessed and binned on the training half.
struct SingleEnergyData {
    FeatureMatrix train;
    FeatureMatrix test;
    PreprocessParams params;
    BinningSpec binning;
    DiscreteDistribution train_hist;
    DiscreteDistribution test_hist;
};

inline SingleEnergyData prepare_single(const ExperimentConfig &c, const std::vector<EventRecord> *csv) {
    const auto events = events_at(c, c.data.energy, csv);
    auto [tr, te] = split_train_test(events, seed_for(c.seed, kSplitSeed));
    SingleEnergyData d;
    auto [ftr, params] = preprocess(tr);
    d.params = params;
    d.train = ftr.select(c.circuit.features);
    d.test = transform(te, params).select(c.circuit.features);
    d.binning = binning_from_range(
        d.train, std::vector<std::size_t>(c.circuit.features.size(), std::size_t{1} << c.circuit.qubits_per_feature));
    d.train_hist = discretize(d.train, d.binning);
    d.test_hist = discretize(d.test, d.binning);
    return d;
}

inline std::vector<std::vector<double>> rows_of(const FeatureMatrix &m) {
    std::vector<std::vector<double>> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out[r].assign(m.row(r).begin(), m.row(r).end());
    }
    return out;
}

/// Off-diagonal Pearson entries in (0,1), (0,2), ..., (1,2), ... order.
inline json off_diagonals(const SquareMatrix &r) {
    json out = json::array();
    for (std::size_t i = 0; i < r.n; ++i) {
        for (std::size_t j = i + 1; j < r.n; ++j) {
            out.push_back(r(i, j));
        }
    }
    return out;
}

inline json matrix_json(const SquareMatrix &r) {
    json out = json::array();
    for (std::size_t i = 0; i < r.n; ++i) {
        std::vector<double> row(r.n);
        for (std::size_t j = 0; j < r.n; ++j) {
            row[j] = r(i, j);
        }
        out.push_back(row);
    }
    return out;
}

inline std::string feature_name(const ExperimentConfig &c, std::size_t k) {
    return kFeatureNames.at(c.circuit.features.at(k));
}

inline BornModel initial_model(const CircuitSpec &circuit, const ExperimentConfig &c,
                               std::optional<ConditionEncoder> encoder = std::nullopt,
                               std::uint64_t index = 0) {
    return BornModel(circuit,
                     init_parameters(circuit.n_parameters, c.circuit.init, seed_for(c.seed, kInitSeed, index)),
                     encoder);
}

inline TrainConfig train_config(const ExperimentConfig &c, std::uint64_t index = 0) {
    TrainConfig t = c.train;
    t.seed = seed_for(c.seed, kTrainSeed, index);
    if (t.optimizer != OptimizerKind::adam) {
        NoiseConfig n = c.noise.config;
        n.seed = seed_for(c.seed, kNoiseSeed, index);
        t.noise = n;
    }
    return t;
}

/// Generated vs target histogram files and report entries for each modeled feature.
inline json emit_histograms(ReportBundle &bundle, const ExperimentConfig &c, const std::string &prefix,
                            const DiscreteDistribution &generated, const DiscreteDistribution &target,
                            const BinningSpec &binning, std::size_t n_events, std::uint64_t seed) {
    json out = json::object();
    for (std::size_t k = 0; k < binning.axes.size(); ++k) {
        const auto name = feature_name(c, k);
        const auto g = generated.n_features() > 1 ? marginal(generated, k) : generated;
        const auto t = target.n_features() > 1 ? marginal(target, k) : target;
        const auto cmp = compare_histograms(g, t, n_events, c.sample_repetitions, mix_seed(seed, k));
        bundle.files[prefix + name + "_target.csv"] = histogram_csv(t, binning.axes[k], n_events);
        bundle.files[prefix + name + "_generated.csv"] = histogram_csv(g, binning.axes[k], n_events);
        bundle.files[prefix + name + "_compare.csv"] = comparison_csv(cmp, binning.axes[k]);
        out[name] = {{"target", t.probs}, {"generated", g.probs}, {"generated_count_std", cmp.generated_std}};
    }
    return out;
}

inline json per_feature_tv(const ExperimentConfig &c, const DiscreteDistribution &p,
                           const DiscreteDistribution &target) {
    json out = json::object();
    for (std::size_t k = 0; k < p.n_features(); ++k) {
        const auto a = p.n_features() > 1 ? marginal(p, k) : p;
        const auto b = target.n_features() > 1 ? marginal(target, k) : target;
        out[feature_name(c, k)] = total_variance(a, b);
    }
    return out;
}

/// Pearson matrix of generated samples mapped to their bin centers.
inline SquareMatrix sampled_correlation(const DiscreteDistribution &p, const BinningSpec &binning,
                                        std::size_t n, std::uint64_t seed) {
    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    for (std::size_t idx : sample(p, n, seed)) {
        rows.push_back(bin_centers(idx, binning));
    }
    return pearson_correlation(rows);
}

inline Checkpoint make_checkpoint(const BornModel &model, const ExperimentConfig &c,
                                  const BinningSpec &binning, const PreprocessParams &params,
                                  const std::string &lineage) {
    Checkpoint cp;
    cp.circuit = model.circuit;
    cp.theta = model.theta;
    cp.encoder = model.encoder;
    cp.features = c.circuit.features;
    cp.binning = binning;
    cp.preprocess = params;
    cp.seed = c.seed;
    cp.lineage = lineage;
    return cp;
}

inline json trained_summary(const TrainResult &r) {
    double final_val = r.trace.epochs.empty() ? r.trace.initial_val_loss : r.trace.epochs.back().val_loss;
    double best_val = r.trace.initial_val_loss;
    for (const auto &e : r.trace.epochs) {
        best_val = std::min(best_val, e.val_loss);
    }
    return {{"initial_val_mmd", r.trace.initial_val_loss},
            {"final_val_mmd", final_val},
            {"best_val_mmd", best_val},
            {"best_epoch", r.trace.best_epoch},
            {"epochs", r.trace.epochs.size()}};
}

struct GmmdOutcome {
    json metrics;
    json histograms;
};

inline GmmdOutcome run_gmmd(ReportBundle &bundle, const ExperimentConfig &c, const SingleEnergyData &d) {
    MlpSpec spec = c.gmmd.spec;
    spec.output_dim = c.circuit.features.size();
    GmmdConfig gc = c.gmmd.config;
    gc.seed = seed_for(c.seed, kGmmdSeed);
    const auto res = train_gmmd(spec, d.train, gc);
    const auto generated = sample_gmmd(res.weights, std::max(c.correlation_samples, d.test.rows()),
                                       seed_for(c.seed, kGmmdSeed, 1));
    const auto hist = discretize(generated, d.binning);
    GmmdOutcome out;
    out.metrics["tv"] = per_feature_tv(c, hist, d.test_hist);
    out.metrics["final_train_mmd"] = res.trace.epochs.back().train_loss;
    out.metrics["n_parameters"] = spec.n_parameters();
    if (spec.output_dim > 1) {
        out.metrics["correlation"] = off_diagonals(pearson_correlation(rows_of(generated)));
    }
    out.histograms = emit_histograms(bundle, c, "gmmd_", hist, d.test_hist, d.binning, d.test.rows(),
                                     seed_for(c.seed, kGmmdSeed, 2));
    bundle.files["gmmd_weights.json"] = weights_to_json(res.weights).dump(1) + "\n";
    bundle.files["gmmd_trace.csv"] = res.trace.to_csv(false);
    return out;
}

inline void run_1d(ReportBundle &b, const ExperimentConfig &c, const std::vector<EventRecord> *csv) {
    const auto d = prepare_single(c, csv);
    const auto circuit = build_1d_rzz_ansatz(c.circuit.qubits_per_feature);
    const auto res = train(initial_model(circuit, c), {{std::nullopt, d.train_hist, d.test_hist}},
                           train_config(c));
    const auto p = model_distribution(res.model);
    json &m = b.report["metrics"];
    m["tv"] = total_variance(p, d.test_hist);
    m["data_tv"] = total_variance(d.train_hist, d.test_hist);
    m["n_parameters"] = circuit.n_parameters;
    m["training"] = trained_summary(res);
    b.report["histograms"] = emit_histograms(b, c, "", p, d.test_hist, d.binning, d.test.rows(),
                                             seed_for(c.seed, kSampleSeed));
    b.report["traces"] = {{"qcbm", trace_to_json(res.trace)}};
    b.files["trace.csv"] = res.trace.to_csv(false);
    b.files["checkpoint.json"] =
        checkpoint_to_json(make_checkpoint(res.model, c, d.binning, d.params, "exp-1d")).dump(1) + "\n";
    if (c.gmmd.enabled) {
        auto g = run_gmmd(b, c, d);
        m["gmmd"] = std::move(g.metrics);
        m["gmmd"]["tv"] = m["gmmd"]["tv"].begin().value();
        b.report["gmmd_histograms"] = std::move(g.histograms);
    }
}

inline json multi_metrics(ReportBundle &b, const ExperimentConfig &c, const SingleEnergyData &d,
                          const TrainResult &res, const std::string &prefix) {
    const auto p = model_distribution(res.model);
    json m;
    m["tv"] = per_feature_tv(c, p, d.test_hist);
    m["data_tv"] = per_feature_tv(c, d.train_hist, d.test_hist);
    m["n_parameters"] = res.model.circuit.n_parameters;
    m["training"] = trained_summary(res);
    const auto gen = sampled_correlation(p, d.binning, c.correlation_samples, seed_for(c.seed, kSampleSeed, 9));
    const auto truth = pearson_correlation(rows_of(d.test));
    std::vector<std::vector<double>> binned_rows;
    for (std::size_t idx : bin_indices(d.test, d.binning)) {
        binned_rows.push_back(bin_centers(idx, d.binning));
    }
    m["correlation"] = {{"pairs", json::array()},
                        {"target", off_diagonals(truth)},
                        {"target_binned", off_diagonals(pearson_correlation(binned_rows))},
                        {"generated", off_diagonals(gen)},
                        {"target_matrix", matrix_json(truth)},
                        {"generated_matrix", matrix_json(gen)}};
    for (std::size_t i = 0; i < c.circuit.features.size(); ++i) {
        for (std::size_t j = i + 1; j < c.circuit.features.size(); ++j) {
            m["correlation"]["pairs"].push_back(feature_name(c, i) + "," + feature_name(c, j));
        }
    }
    if (!prefix.empty()) {
        return m;
    }
    b.report["histograms"] = emit_histograms(b, c, prefix, p, d.test_hist, d.binning, d.test.rows(),
                                             seed_for(c.seed, kSampleSeed));
    return m;
}

inline void run_multi(ReportBundle &b, const ExperimentConfig &c, const std::vector<EventRecord> *csv) {
    const auto d = prepare_single(c, csv);
    const auto choice = CorrelationBlockChoice::from_label(c.circuit.block);
    const auto circuit = build_multivariate(c.circuit.features.size(), c.circuit.qubits_per_feature,
                                            c.circuit.repetitions, choice);
    const auto res = train(initial_model(circuit, c), {{std::nullopt, d.train_hist, d.test_hist}},
                           train_config(c));
    b.report["metrics"] = multi_metrics(b, c, d, res, "");
    b.report["traces"] = {{"qcbm", trace_to_json(res.trace)}};
    b.files["trace.csv"] = res.trace.to_csv(false);
    b.files["checkpoint.json"] =
        checkpoint_to_json(make_checkpoint(res.model, c, d.binning, d.params, "exp-multi")).dump(1) + "\n";
    if (c.gmmd.enabled) {
        auto g = run_gmmd(b, c, d);
        b.report["metrics"]["gmmd"] = std::move(g.metrics);
        b.report["gmmd_histograms"] = std::move(g.histograms);
    }
}

inline void run_blocks(ReportBundle &b, const ExperimentConfig &c, const std::vector<EventRecord> *csv) {
    const auto d = prepare_single(c, csv);
    const auto choices = CorrelationBlockChoice::all();
    std::vector<std::optional<TrainResult>> results(choices.size());
    auto run_one = [&](std::size_t i) {
        const auto circuit = build_multivariate(c.circuit.features.size(), c.circuit.qubits_per_feature,
                                                c.circuit.repetitions, choices[i]);
        const std::uint64_t index = seed_for(0, kBlockSeed, i);
        results[i] = train(initial_model(circuit, c, std::nullopt, index),
                           {{std::nullopt, d.train_hist, d.test_hist}}, train_config(c, index));
    };
    std::size_t threads = c.threads ? c.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = std::min(threads, choices.size());
    std::vector<std::future<void>> pending;
    std::size_t next = 0;
    while (next < choices.size() || !pending.empty()) {
        while (next < choices.size() && pending.size() < threads) {
            pending.push_back(std::async(std::launch::async, run_one, next++));
        }
        pending.front().get();
        pending.erase(pending.begin());
    }
    json variants = json::object();
    json traces = json::object();
    std::vector<std::pair<double, std::string>> ranking;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        const auto label = choices[i].label();
        const TrainResult &r = *results[i];
        variants[label] = multi_metrics(b, c, d, r, label + "_");
        traces[label] = trace_to_json(r.trace);
        ranking.emplace_back(variants[label]["training"]["final_val_mmd"].get<double>(), label);
        b.files["trace_" + label + ".csv"] = r.trace.to_csv(false);
    }
    std::stable_sort(ranking.begin(), ranking.end());
    json order = json::array();
    for (const auto &r : ranking) {
        order.push_back(r.second);
    }
    b.report["metrics"] = {{"variants", variants}, {"ranking_by_final_val_mmd", order}};
    b.report["traces"] = traces;
}

inline void run_cond(ReportBundle &b, const ExperimentConfig &c, const std::vector<EventRecord> *csv) {
    const auto &energies = c.data.energies;
    auto held = [&](double e) {
        return std::find(c.data.held_out.begin(), c.data.held_out.end(), e) != c.data.held_out.end();
    };
    std::vector<std::vector<EventRecord>> train_ev(energies.size());
    std::vector<std::vector<EventRecord>> test_ev(energies.size());
    std::vector<EventRecord> pooled;
    for (std::size_t k = 0; k < energies.size(); ++k) {
        auto [tr, te] = split_train_test(events_at(c, energies[k], csv), seed_for(c.seed, kSplitSeed, k));
        if (!held(energies[k])) {
            pooled.insert(pooled.end(), tr.begin(), tr.end());
        }
        train_ev[k] = std::move(tr);
        test_ev[k] = std::move(te);
    }
    const auto [pooled_features, params] = preprocess(pooled);
    const std::size_t bins = std::size_t{1} << c.circuit.qubits_per_feature;
    const auto binning = binning_from_range(pooled_features.select(c.circuit.features), {bins});
    const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
    const ConditionEncoder encoder{*lo, *hi};

    std::vector<TrainingTarget> targets;
    std::vector<DiscreteDistribution> train_hist;
    std::vector<DiscreteDistribution> test_hist;
    std::vector<std::size_t> test_rows;
    for (std::size_t k = 0; k < energies.size(); ++k) {
        auto a = discretize(transform(train_ev[k], params).select(c.circuit.features), binning);
        auto t = discretize(transform(test_ev[k], params).select(c.circuit.features), binning);
        a.condition = energies[k];
        t.condition = energies[k];
        if (!held(energies[k])) {
            targets.push_back({energies[k], a, t});
        }
        train_hist.push_back(std::move(a));
        test_hist.push_back(std::move(t));
        test_rows.push_back(test_ev[k].size());
    }
    const auto circuit = build_conditional(c.circuit.qubits_per_feature, c.circuit.layers);
    const auto res = train(initial_model(circuit, c, encoder), targets, train_config(c));

    json per = json::array();
    json hists = json::object();
    double worst_test = 0.0;
    for (std::size_t k = 0; k < energies.size(); ++k) {
        const auto p = model_distribution(res.model, energies[k]);
        const double tv = total_variance(p, test_hist[k]);
        if (held(energies[k])) {
            worst_test = std::max(worst_test, tv);
        }
        std::ostringstream tag;
        tag << "e" << energies[k] << "_";
        per.push_back({{"energy", energies[k]},
                       {"role", held(energies[k]) ? "test" : "train"},
                       {"tv", tv},
                       {"data_tv", total_variance(train_hist[k], test_hist[k])}});
        hists[tag.str() + "hist"] = emit_histograms(b, c, tag.str(), p, test_hist[k], binning, test_rows[k],
                                                    seed_for(c.seed, kSampleSeed, k));
    }
    json &m = b.report["metrics"];
    m["per_condition"] = per;
    m["held_out_tv_max"] = worst_test;
    m["n_parameters"] = circuit.n_parameters;
    m["n_data_slots"] = circuit.n_data_slots;
    m["training"] = trained_summary(res);
    b.report["histograms"] = hists;
    b.report["traces"] = {{"qcbm", trace_to_json(res.trace)}};
    b.files["trace.csv"] = res.trace.to_csv(false);
    b.files["checkpoint.json"] =
        checkpoint_to_json(make_checkpoint(res.model, c, binning, params, "exp-cond")).dump(1) + "\n";
}

inline void run_noise(ReportBundle &b, const ExperimentConfig &c, const std::vector<EventRecord> *csv) {
    const auto d = prepare_single(c, csv);
    const auto circuit = build_1d_rzz_ansatz(c.circuit.qubits_per_feature);
    const auto tc = train_config(c);
    const auto res = train(initial_model(circuit, c), {{std::nullopt, d.train_hist, d.test_hist}}, tc);
    NoiseConfig nc = c.noise.config;
    nc.seed = seed_for(c.seed, kNoiseSeed, 100);
    const auto confusion = c.noise.calibration_shots
                               ? estimate_confusion_matrix(circuit.n_qubits, nc, c.noise.calibration_shots)
                               : readout_confusion_matrix(circuit.n_qubits, nc);

    const auto exact = model_distribution(res.model);
    const auto noisy_exact = noisy_model_distribution(res.model, std::nullopt, nc);
    const auto noisy = sampled_distribution(noisy_exact, c.noise.shots, seed_for(c.seed, kSampleSeed, 3));
    const auto mitigated = mitigate_readout(noisy, confusion);

    json &m = b.report["metrics"];
    m["tv"] = {{"exact", total_variance(exact, d.test_hist)},
               {"noisy", total_variance(noisy, d.test_hist)},
               {"noisy_mitigated", total_variance(mitigated.distribution, d.test_hist)}};
    m["tv_to_exact_model"] = {{"noisy", total_variance(noisy, exact)},
                              {"noisy_mitigated", total_variance(mitigated.distribution, exact)}};
    m["mitigation_clipped"] = mitigated.clipped;
    m["optimizer"] = to_string(c.train.optimizer);
    m["n_parameters"] = circuit.n_parameters;
    m["training"] = trained_summary(res);
    if (!res.adam_best_theta.empty() && !res.spsa_start_theta.empty()) {
        m["spsa_started_from_adam_best"] = res.adam_best_theta == res.spsa_start_theta;
    }
    json hists = json::object();
    hists["exact"] = emit_histograms(b, c, "exact_", exact, d.test_hist, d.binning, d.test.rows(),
                                     seed_for(c.seed, kSampleSeed, 10));
    hists["noisy"] = emit_histograms(b, c, "noisy_", noisy, d.test_hist, d.binning, d.test.rows(),
                                     seed_for(c.seed, kSampleSeed, 11));
    hists["noisy_mitigated"] = emit_histograms(b, c, "mitigated_", mitigated.distribution, d.test_hist,
                                               d.binning, d.test.rows(), seed_for(c.seed, kSampleSeed, 12));
    b.report["histograms"] = hists;
    b.report["traces"] = {{"qcbm", trace_to_json(res.trace)}};
    b.metadata["mitigation_clipped"] = mitigated.clipped;
    b.files["trace.csv"] = res.trace.to_csv(false);
    b.files["confusion.json"] = confusion_to_json(confusion).dump(1) + "\n";
    b.files["checkpoint.json"] =
        checkpoint_to_json(make_checkpoint(res.model, c, d.binning, d.params, "exp-noise")).dump(1) + "\n";
}

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace detail

/// Runs one experiment in memory. Throws ConfigError or TrainingAborted.
inline ReportBundle run_experiment(const ExperimentConfig &config) {
    validate_config(config);
    ReportBundle b;
    const auto started = std::chrono::steady_clock::now();
    b.metadata["started_at"] = detail::utc_now();
    b.report["experiment"] = to_string(config.experiment);
    b.report["version"] = kVersion;
    b.report["seed"] = config.seed;
    b.report["config"] = config_to_json(config);
    b.report["metrics"] = json::object();

    std::optional<std::vector<EventRecord>> csv;
    if (config.data.source == "csv") {
        csv = load_csv(config.data.csv_path);
    }
    const std::vector<EventRecord> *events = csv ? &*csv : nullptr;
    switch (config.experiment) {
    case ExperimentKind::exp_1d:
        detail::run_1d(b, config, events);
        break;
    case ExperimentKind::exp_multi:
        detail::run_multi(b, config, events);
        break;
    case ExperimentKind::exp_cond:
        detail::run_cond(b, config, events);
        break;
    case ExperimentKind::exp_blocks:
        detail::run_blocks(b, config, events);
        break;
    case ExperimentKind::exp_noise:
        detail::run_noise(b, config, events);
        break;
    }
    b.metadata["finished_at"] = detail::utc_now();
    b.metadata["seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    b.metadata["version"] = kVersion;
    return b;
}

/// Writes every artifact of the bundle into `dir`, creating it if needed.
inline void write_bundle(const ReportBundle &b, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    write_text((dir / "report.json").string(), b.report.dump(2) + "\n");
    write_text((dir / "metadata.json").string(), b.metadata.dump(2) + "\n");
    for (const auto &[name, text] : b.files) {
        write_text((dir / name).string(), text);
    }
}

struct MetricDelta {
    std::string path;
    double a{0.0};
    double b{0.0};
    [[nodiscard]] double delta() const { return b - a; }
};

struct ReportDiff {
    std::vector<MetricDelta> deltas;
    std::vector<MetricDelta> regressions;
    [[nodiscard]] bool regressed() const { return !regressions.empty(); }
};

namespace detail {

inline void collect_numbers(const json &j, const std::string &path, std::map<std::string, double> &out,
                            std::set<std::string> &other) {
    if (j.is_object()) {
        for (const auto &[k, v] : j.items()) {
            collect_numbers(v, path.empty() ? k : path + "." + k, out, other);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            collect_numbers(j[i], path + "[" + std::to_string(i) + "]", out, other);
        }
    } else if (j.is_number()) {
        out[path] = j.get<double>();
    } else {
        other.insert(path);
    }
}

} // namespace detail

/**
 * Per-metric deltas between the "metrics" sections of two reports of the
 * same experiment. Any numeric metric whose absolute change exceeds
 * `tolerance` is a regression. A metric present in only one report is a
 * structural mismatch and throws.
 */
inline ReportDiff compare_reports(const json &a, const json &b, double tolerance) {
    if (!a.contains("experiment") || !b.contains("experiment")) {
        throw std::invalid_argument("reports must name their experiment");
    }
    if (a.at("experiment") != b.at("experiment")) {
        throw std::invalid_argument("experiment type mismatch: " + a.at("experiment").get<std::string>() +
                                    " vs " + b.at("experiment").get<std::string>());
    }
    std::map<std::string, double> na;
    std::map<std::string, double> nb;
    std::set<std::string> oa;
    std::set<std::string> ob;
    detail::collect_numbers(a.value("metrics", json::object()), "", na, oa);
    detail::collect_numbers(b.value("metrics", json::object()), "", nb, ob);
    for (const auto &[k, v] : na) {
        if (!nb.contains(k)) {
            throw std::invalid_argument("structural mismatch: metric '" + k + "' missing from second report");
        }
    }
    for (const auto &[k, v] : nb) {
        if (!na.contains(k)) {
            throw std::invalid_argument("structural mismatch: metric '" + k + "' missing from first report");
        }
    }
    if (oa != ob) {
        throw std::invalid_argument("structural mismatch: non-numeric metric fields differ");
    }
    ReportDiff diff;
    for (const auto &[k, v] : na) {
        MetricDelta d{k, v, nb.at(k)};
        if (d.delta() != 0.0) {
            diff.deltas.push_back(d);
        }
        if (std::abs(d.delta()) > tolerance) {
            diff.regressions.push_back(d);
        }
    }
    return diff;
}

} // namespace qcbm
