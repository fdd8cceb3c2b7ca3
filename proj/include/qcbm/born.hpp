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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qcbm/circuit_spec.hpp"
#include "qcbm/circuits.hpp"
#include "qcbm/core.hpp"
#include "qcbm/distribution.hpp"
#include "qcbm/sim.hpp"

namespace qcbm {

/// Min-max range used to turn an incoming energy into feature-map angles.
struct ConditionEncoder {
    double e_min{0.0};
    double e_max{1.0};

    bool operator==(const ConditionEncoder &) const = default;
};

/**
 * Two-term shift rule for a gate exp(-i angle G) whose generator G has
 * eigenvalues +-r: d f / d angle = r [f(angle + s) - f(angle - s)], s = pi/(4r).
 * RY and RX have r = 1/2; RZZ as exp(-i angle ZZ) has r = 1.
 */
struct ShiftRule {
    double shift{kPi / 2};
    double coefficient{0.5};
};

constexpr ShiftRule shift_rule(GateKind kind) {
    if (kind == GateKind::RZZ) {
        return {kPi / 4, 1.0};
    }
    return {kPi / 2, 0.5};
}

struct BornModel {
    CircuitSpec circuit;
    std::vector<double> theta;
    std::optional<ConditionEncoder> encoder;

    BornModel() = default;

    BornModel(CircuitSpec c, std::vector<double> t, std::optional<ConditionEncoder> enc = {})
        : circuit(std::move(c)), theta(std::move(t)), encoder(enc) {
        if (theta.size() != circuit.n_parameters) {
            throw std::invalid_argument("theta has " + std::to_string(theta.size()) +
                                        " entries, circuit expects " +
                                        std::to_string(circuit.n_parameters));
        }
        if (encoder.has_value() != (circuit.n_data_slots > 0)) {
            throw std::invalid_argument(
                "a condition encoder is required exactly when the circuit has data slots");
        }
        circuit.validate();
    }

    [[nodiscard]] std::size_t n_parameters() const { return circuit.n_parameters; }
    [[nodiscard]] bool conditional() const { return encoder.has_value(); }

    /// Feature-map angles for `condition`; empty for unconditional models.
    [[nodiscard]] std::vector<double> data_angles(std::optional<double> condition) const {
        if (condition.has_value() != conditional()) {
            throw std::invalid_argument(conditional()
                                            ? "conditional model requires a condition"
                                            : "unconditional model takes no condition");
        }
        if (!condition) {
            return {};
        }
        const double angle = encode_condition(*condition, encoder->e_min, encoder->e_max);
        return std::vector<double>(circuit.n_data_slots, angle);
    }
};

namespace detail {

inline DiscreteDistribution distribution_for(const BornModel &model, std::span<const double> theta,
                                             std::span<const double> data,
                                             std::optional<double> condition,
                                             std::optional<GateShift> shift = std::nullopt) {
    const State state = run_circuit(model.circuit, theta, data, shift);
    return {state.probabilities(), model.circuit.register_bits(), condition};
}

} // namespace detail

/// Joint distribution over the model's registers; basis bits split by register.
inline DiscreteDistribution model_distribution(const BornModel &model,
                                               std::optional<double> condition = std::nullopt) {
    const auto data = model.data_angles(condition);
    return detail::distribution_for(model, model.theta, data, condition);
}

/// Sums the joint over every feature except `feature`.
inline DiscreteDistribution marginal(const DiscreteDistribution &dist, std::size_t feature) {
    if (feature >= dist.n_features()) {
        throw std::out_of_range("unknown feature " + std::to_string(feature));
    }
    const unsigned off = dist.offset_of(feature);
    const unsigned bits = dist.register_bits[feature];
    const std::size_t mask = (std::size_t{1} << bits) - 1;
    std::vector<double> p(std::size_t{1} << bits, 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        p[(i >> off) & mask] += dist.probs[i];
    }
    return {std::move(p), {bits}, dist.condition};
}

/**
 * Distributions at theta +- s e_i, with s from the shift rule of the gate
 * reading parameter i (pi/2 for RY and RX). The model is not modified.
 */
inline std::pair<DiscreteDistribution, DiscreteDistribution>
shifted_distributions(const BornModel &model, std::size_t param_index,
                      std::optional<double> condition = std::nullopt) {
    if (param_index >= model.n_parameters()) {
        throw std::out_of_range("parameter index " + std::to_string(param_index) +
                                " out of range");
    }
    double s = kPi / 2;
    for (const auto &g : model.circuit.gates) {
        if (g.parameter_slot() == param_index) {
            s = shift_rule(g.kind).shift;
            break;
        }
    }
    const auto data = model.data_angles(condition);
    std::vector<double> plus = model.theta;
    std::vector<double> minus = model.theta;
    plus[param_index] += s;
    minus[param_index] -= s;
    return {detail::distribution_for(model, plus, data, condition),
            detail::distribution_for(model, minus, data, condition)};
}

/**
 * Per-gate shifted pair used by gradient assembly: only the gate at
 * `gate_index` is shifted, so parameters shared between gates are handled
 * by summing over their gates.
 */
inline std::pair<DiscreteDistribution, DiscreteDistribution>
gate_shifted_distributions(const BornModel &model, std::size_t gate_index,
                           std::span<const double> data, std::optional<double> condition) {
    const double s = shift_rule(model.circuit.gates.at(gate_index).kind).shift;
    return {detail::distribution_for(model, model.theta, data, condition, GateShift{gate_index, s}),
            detail::distribution_for(model, model.theta, data, condition,
                                     GateShift{gate_index, -s})};
}

} // namespace qcbm
