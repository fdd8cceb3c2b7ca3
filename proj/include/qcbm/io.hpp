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
 * JSON and CSV forms of circuits, checkpoints, traces, confusion matrices,
 * network weights and histograms.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "qcbm/baseline.hpp"
#include "qcbm/born.hpp"
#include "qcbm/circuit_spec.hpp"
#include "qcbm/data.hpp"
#include "qcbm/noise.hpp"
#include "qcbm/optimize.hpp"
#include "qcbm/sim.hpp"

namespace qcbm {

using json = nlohmann::ordered_json;

inline std::string_view to_string(SlotSource s) {
    switch (s) {
    case SlotSource::trainable:
        return "trainable";
    case SlotSource::data:
        return "data";
    case SlotSource::none:
        break;
    }
    return "none";
}

inline SlotSource slot_source_from_string(std::string_view s) {
    if (s == "trainable") {
        return SlotSource::trainable;
    }
    if (s == "data") {
        return SlotSource::data;
    }
    if (s == "none") {
        return SlotSource::none;
    }
    throw std::invalid_argument("unknown slot source '" + std::string(s) + "'");
}

inline json circuit_to_json(const CircuitSpec &c) {
    json gates = json::array();
    for (const auto &g : c.gates) {
        json jg{{"kind", to_string(g.kind)}, {"targets", g.targets}};
        if (g.source != SlotSource::none) {
            jg["source"] = to_string(g.source);
            jg["slot"] = g.slot;
        }
        gates.push_back(std::move(jg));
    }
    json regs = json::array();
    for (const auto &r : c.registers) {
        regs.push_back({{"name", r.name}, {"first_qubit", r.first_qubit}, {"size", r.size}});
    }
    return {{"n_qubits", c.n_qubits},
            {"n_parameters", c.n_parameters},
            {"n_data_slots", c.n_data_slots},
            {"registers", std::move(regs)},
            {"gates", std::move(gates)}};
}

inline CircuitSpec circuit_from_json(const json &j) {
    CircuitSpec c;
    c.n_qubits = j.at("n_qubits").get<std::size_t>();
    c.n_parameters = j.at("n_parameters").get<std::size_t>();
    c.n_data_slots = j.value("n_data_slots", std::size_t{0});
    for (const auto &r : j.at("registers")) {
        c.registers.push_back({r.at("name").get<std::string>(), r.at("first_qubit").get<std::size_t>(),
                               r.at("size").get<std::size_t>()});
    }
    for (const auto &g : j.at("gates")) {
        Gate gate;
        gate.kind = gate_kind_from_string(g.at("kind").get<std::string>());
        gate.targets = g.at("targets").get<std::vector<std::size_t>>();
        gate.source = slot_source_from_string(g.value("source", std::string("none")));
        gate.slot = g.value("slot", std::size_t{0});
        c.gates.push_back(std::move(gate));
    }
    c.validate();
    return c;
}

inline json binning_to_json(const BinningSpec &b) {
    json axes = json::array();
    for (const auto &a : b.axes) {
        axes.push_back({{"bins", a.bins}, {"lower", a.lower}, {"upper", a.upper}});
    }
    return axes;
}

inline BinningSpec binning_from_json(const json &j) {
    BinningSpec b;
    for (const auto &a : j) {
        b.axes.push_back({a.at("bins").get<std::size_t>(), a.at("lower").get<double>(),
                          a.at("upper").get<double>()});
    }
    b.validate();
    return b;
}

inline json preprocess_to_json(const PreprocessParams &p) {
    return {{"incoming_energy_mean", p.incoming_energy_mean},
            {"pt_exponent", p.pt_exponent},
            {"mean", p.mean},
            {"std", p.std}};
}

inline PreprocessParams preprocess_from_json(const json &j) {
    PreprocessParams p;
    p.incoming_energy_mean = j.at("incoming_energy_mean").get<double>();
    p.pt_exponent = j.at("pt_exponent").get<double>();
    p.mean = j.at("mean").get<std::array<double, kNumFeatures>>();
    p.std = j.at("std").get<std::array<double, kNumFeatures>>();
    return p;
}

/// Everything needed to regenerate samples from a trained model.
struct Checkpoint {
    CircuitSpec circuit;
    std::vector<double> theta;
    std::optional<ConditionEncoder> encoder;
    std::vector<std::size_t> features;
    BinningSpec binning;
    PreprocessParams preprocess;
    std::uint64_t seed{0};
    std::string lineage;

    [[nodiscard]] BornModel model() const { return BornModel(circuit, theta, encoder); }
};

inline json checkpoint_to_json(const Checkpoint &c) {
    json j{{"circuit", circuit_to_json(c.circuit)}, {"theta", c.theta}};
    if (c.encoder) {
        j["encoder"] = {{"e_min", c.encoder->e_min}, {"e_max", c.encoder->e_max}};
    } else {
        j["encoder"] = nullptr;
    }
    j["features"] = c.features;
    j["binning"] = binning_to_json(c.binning);
    j["preprocess"] = preprocess_to_json(c.preprocess);
    j["seed"] = c.seed;
    j["lineage"] = c.lineage;
    return j;
}

inline Checkpoint checkpoint_from_json(const json &j) {
    Checkpoint c;
    c.circuit = circuit_from_json(j.at("circuit"));
    c.theta = j.at("theta").get<std::vector<double>>();
    if (j.contains("encoder") && !j.at("encoder").is_null()) {
        c.encoder = ConditionEncoder{j.at("encoder").at("e_min").get<double>(),
                                     j.at("encoder").at("e_max").get<double>()};
    }
    c.features = j.at("features").get<std::vector<std::size_t>>();
    c.binning = binning_from_json(j.at("binning"));
    c.preprocess = preprocess_from_json(j.at("preprocess"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.lineage = j.value("lineage", std::string());
    if (c.theta.size() != c.circuit.n_parameters) {
        throw std::invalid_argument("checkpoint theta length does not match the circuit");
    }
    return c;
}

/// Wall-clock seconds are left out so traces compare byte for byte.
inline json trace_to_json(const TrainTrace &t) {
    json epochs = json::array();
    for (const auto &e : t.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"phase", e.phase},
                          {"train_loss", e.train_loss},
                          {"val_loss", e.val_loss},
                          {"tv", e.tv},
                          {"lr", e.lr},
                          {"grad_norm", e.grad_norm}});
    }
    return {{"initial_val_loss", t.initial_val_loss}, {"best_epoch", t.best_epoch}, {"epochs", epochs}};
}

inline json confusion_to_json(const ConfusionMatrix &m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.matrix.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.matrix.cols()));
        for (Eigen::Index c = 0; c < m.matrix.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = m.matrix(r, c);
        }
        rows.push_back(row);
    }
    return {{"n_qubits", m.n_qubits}, {"layout", "observed,true"}, {"matrix", rows}};
}

inline ConfusionMatrix confusion_from_json(const json &j) {
    ConfusionMatrix m;
    m.n_qubits = j.at("n_qubits").get<std::size_t>();
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    const std::size_t dim = std::size_t{1} << m.n_qubits;
    if (rows.size() != dim) {
        throw std::invalid_argument("confusion matrix has the wrong number of rows");
    }
    m.matrix.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
        if (rows[r].size() != dim) {
            throw std::invalid_argument("confusion matrix row " + std::to_string(r) + " has the wrong length");
        }
        for (std::size_t c = 0; c < dim; ++c) {
            m.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

inline json weights_to_json(const MlpWeights &w) {
    return {{"latent_dim", w.spec.latent_dim},
            {"hidden", w.spec.hidden},
            {"output_dim", w.spec.output_dim},
            {"activation", "sigmoid"},
            {"layout", "per layer: weight (out x in, column-major) then bias"},
            {"params", w.params}};
}

inline MlpWeights weights_from_json(const json &j) {
    MlpSpec spec{j.at("latent_dim").get<std::size_t>(), j.at("hidden").get<std::vector<std::size_t>>(),
                 j.at("output_dim").get<std::size_t>()};
    MlpWeights w(spec);
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != w.params.size()) {
        throw std::invalid_argument("weight count does not match the network shape");
    }
    w.params = std::move(params);
    return w;
}

/// bin_index,bin_center,count,probability for a one-axis histogram of `total` events.
inline std::string histogram_csv(const DiscreteDistribution &dist, const BinAxis &axis,
                                 std::size_t total) {
    if (dist.size() != axis.bins) {
        throw std::invalid_argument("histogram and bin axis sizes differ");
    }
    std::ostringstream out;
    out.precision(12);
    out << "bin_index,bin_center,count,probability\n";
    for (std::size_t i = 0; i < dist.size(); ++i) {
        out << i << ',' << axis.center(i) << ','
            << std::llround(dist.probs[i] * static_cast<double>(total)) << ',' << dist.probs[i] << '\n';
    }
    return out.str();
}

/// Generated-vs-target counts per bin, with mean and standard deviation over sampling repetitions.
struct HistogramComparison {
    std::vector<double> target_count;
    std::vector<double> generated_mean;
    std::vector<double> generated_std;
};

/**
 * Draws `repetitions` samples of `n_events` from `generated` and compares
 * their counts with the target histogram of the same size.
 */
inline HistogramComparison compare_histograms(const DiscreteDistribution &generated,
                                              const DiscreteDistribution &target,
                                              std::size_t n_events, std::size_t repetitions,
                                              std::uint64_t seed) {
    require_same_bins(generated, target);
    if (repetitions == 0 || n_events == 0) {
        throw std::invalid_argument("comparison needs at least one repetition and one event");
    }
    const std::size_t n = generated.size();
    HistogramComparison h;
    h.target_count.resize(n);
    h.generated_mean.assign(n, 0.0);
    h.generated_std.assign(n, 0.0);
    std::vector<double> sq(n, 0.0);
    for (std::size_t r = 0; r < repetitions; ++r) {
        const auto s = sampled_distribution(generated, n_events, derive_rng(seed, r)());
        for (std::size_t i = 0; i < n; ++i) {
            const double c = s.probs[i] * static_cast<double>(n_events);
            h.generated_mean[i] += c;
            sq[i] += c * c;
        }
    }
    const double reps = static_cast<double>(repetitions);
    for (std::size_t i = 0; i < n; ++i) {
        h.target_count[i] = target.probs[i] * static_cast<double>(n_events);
        h.generated_mean[i] /= reps;
        h.generated_std[i] = std::sqrt(std::max(0.0, sq[i] / reps - h.generated_mean[i] * h.generated_mean[i]));
    }
    return h;
}

/// bin_index,bin_center,target_count,generated_count,generated_std,ratio,ratio_std
inline std::string comparison_csv(const HistogramComparison &h, const BinAxis &axis) {
    std::ostringstream out;
    out.precision(12);
    out << "bin_index,bin_center,target_count,generated_count,generated_std,ratio,ratio_std\n";
    for (std::size_t i = 0; i < h.target_count.size(); ++i) {
        const double t = h.target_count[i];
        out << i << ',' << axis.center(i) << ',' << t << ',' << h.generated_mean[i] << ','
            << h.generated_std[i] << ',';
        if (t > 0.0) {
            out << h.generated_mean[i] / t << ',' << h.generated_std[i] / t;
        } else {
            out << "nan,nan";
        }
        out << '\n';
    }
    return out.str();
}

inline void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
}

inline std::string read_text(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace qcbm
