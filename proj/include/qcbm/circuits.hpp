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
 * Builders for the three circuit families: the layered hardware-efficient
 * ansatz, the multi-register ansatz with fixed correlation blocks, and the
 * conditional ansatz with an RY feature map.
 *
 * Trainable slots are numbered layer-major, then register-major, then by
 * ascending qubit.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qcbm/circuit_spec.hpp"

namespace qcbm {

enum class Connectivity { linear, full };
enum class DepthPairs { first_only, all };
enum class BlockStyle { hh_cx, bell };

struct CorrelationBlockChoice {
    Connectivity connectivity{Connectivity::linear};
    DepthPairs depth_pairs{DepthPairs::first_only};
    BlockStyle style{BlockStyle::hh_cx};

    bool operator==(const CorrelationBlockChoice &) const = default;

    /// Short label such as "linear,1" or "full,all,bell".
    [[nodiscard]] std::string label() const {
        std::string s = connectivity == Connectivity::linear ? "linear" : "full";
        s += depth_pairs == DepthPairs::first_only ? ",1" : ",all";
        if (style == BlockStyle::bell) {
            s += ",bell";
        }
        return s;
    }

    static CorrelationBlockChoice from_label(std::string_view label) {
        for (const auto &c : all()) {
            if (c.label() == label) {
                return c;
            }
        }
        throw std::invalid_argument("unknown correlation block '" + std::string(label) + "'");
    }

    static std::array<CorrelationBlockChoice, 8> all() {
        std::array<CorrelationBlockChoice, 8> out{};
        std::size_t i = 0;
        for (auto s : {BlockStyle::hh_cx, BlockStyle::bell}) {
            for (auto c : {Connectivity::linear, Connectivity::full}) {
                for (auto d : {DepthPairs::first_only, DepthPairs::all}) {
                    out[i++] = {c, d, s};
                }
            }
        }
        return out;
    }
};

namespace detail {

inline void append_ry_layer(CircuitSpec &c, std::size_t first_qubit, std::size_t count) {
    for (std::size_t q = first_qubit; q < first_qubit + count; ++q) {
        c.gates.push_back(Gate::trainable(GateKind::RY, {q}, c.n_parameters++));
    }
}

inline void append_cnot_chain(CircuitSpec &c, std::size_t first_qubit, std::size_t count) {
    for (std::size_t q = first_qubit; q + 1 < first_qubit + count; ++q) {
        c.gates.push_back(Gate::fixed(GateKind::CNOT, {q, q + 1}));
    }
}

inline std::vector<Register> even_registers(std::size_t n_registers, std::size_t per_register) {
    std::vector<Register> regs;
    for (std::size_t r = 0; r < n_registers; ++r) {
        regs.push_back({"f" + std::to_string(r), r * per_register, per_register});
    }
    return regs;
}

/// Register pairs: neighbours first, then longer ranges (full only).
inline std::vector<std::pair<std::size_t, std::size_t>> register_pairs(std::size_t n_registers,
                                                                       Connectivity conn) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const std::size_t max_gap = conn == Connectivity::linear ? 1 : n_registers - 1;
    for (std::size_t gap = 1; gap <= max_gap; ++gap) {
        for (std::size_t a = 0; a + gap < n_registers; ++a) {
            pairs.emplace_back(a, a + gap);
        }
    }
    return pairs;
}

inline void append_correlation_block(CircuitSpec &c, std::size_t n_registers,
                                     std::size_t per_register, CorrelationBlockChoice choice) {
    const std::size_t depth = choice.depth_pairs == DepthPairs::first_only ? 1 : per_register;
    const auto pairs = register_pairs(n_registers, choice.connectivity);
    for (std::size_t i = 0; i < depth; ++i) {
        if (choice.style == BlockStyle::hh_cx) {
            for (auto [a, b] : pairs) {
                const std::size_t qa = a * per_register + i;
                const std::size_t qb = b * per_register + i;
                c.gates.push_back(Gate::fixed(GateKind::H, {qa}));
                c.gates.push_back(Gate::fixed(GateKind::H, {qb}));
                c.gates.push_back(Gate::fixed(GateKind::CNOT, {qa, qb}));
            }
        } else {
            c.gates.push_back(Gate::fixed(GateKind::H, {i}));
            for (auto [a, b] : pairs) {
                c.gates.push_back(
                    Gate::fixed(GateKind::CNOT, {a * per_register + i, b * per_register + i}));
            }
        }
    }
}

} // namespace detail

/**
 * Layered ansatz: per layer RY on every qubit, optionally RX on every qubit,
 * then a CNOT chain 0->1->...->N-1; a final RY layer precedes measurement.
 */
inline CircuitSpec build_hardware_efficient(std::size_t n_qubits, std::size_t n_layers,
                                            bool with_rx) {
    if (n_qubits == 0) {
        throw std::invalid_argument("hardware-efficient ansatz needs at least one qubit");
    }
    CircuitSpec c;
    c.n_qubits = n_qubits;
    c.registers = {{"f0", 0, n_qubits}};
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
        detail::append_ry_layer(c, 0, n_qubits);
        if (with_rx) {
            for (std::size_t q = 0; q < n_qubits; ++q) {
                c.gates.push_back(Gate::trainable(GateKind::RX, {q}, c.n_parameters++));
            }
        }
        detail::append_cnot_chain(c, 0, n_qubits);
    }
    detail::append_ry_layer(c, 0, n_qubits);
    return c;
}

/**
 * One RY and RX layer, RZZ on every qubit pair in lexicographic order, then
 * the final RY layer. 2N + N(N-1)/2 + N parameters.
 */
inline CircuitSpec build_1d_rzz_ansatz(std::size_t n_qubits) {
    if (n_qubits < 2) {
        throw std::invalid_argument("RZZ ansatz needs at least two qubits");
    }
    CircuitSpec c;
    c.n_qubits = n_qubits;
    c.registers = {{"f0", 0, n_qubits}};
    detail::append_ry_layer(c, 0, n_qubits);
    for (std::size_t q = 0; q < n_qubits; ++q) {
        c.gates.push_back(Gate::trainable(GateKind::RX, {q}, c.n_parameters++));
    }
    for (std::size_t i = 0; i < n_qubits; ++i) {
        for (std::size_t j = i + 1; j < n_qubits; ++j) {
            c.gates.push_back(Gate::trainable(GateKind::RZZ, {i, j}, c.n_parameters++));
        }
    }
    detail::append_ry_layer(c, 0, n_qubits);
    return c;
}

/// Parameter-free entangling block between equally sized registers.
inline CircuitSpec build_correlation_block(std::size_t n_registers, std::size_t qubits_per_register,
                                           CorrelationBlockChoice choice) {
    if (n_registers < 2) {
        throw std::invalid_argument("correlation block needs at least two registers");
    }
    if (qubits_per_register == 0) {
        throw std::invalid_argument("registers must hold at least one qubit");
    }
    CircuitSpec c;
    c.n_qubits = n_registers * qubits_per_register;
    c.registers = detail::even_registers(n_registers, qubits_per_register);
    detail::append_correlation_block(c, n_registers, qubits_per_register, choice);
    return c;
}

/**
 * Multi-register ansatz: `n_repetitions` rounds of [correlation block, then
 * per register an RY layer and a CNOT chain], followed by a final RY layer.
 */
inline CircuitSpec build_multivariate(std::size_t n_registers, std::size_t qubits_per_register,
                                      std::size_t n_repetitions, CorrelationBlockChoice choice) {
    if (n_registers < 2) {
        throw std::invalid_argument("multivariate ansatz needs at least two registers");
    }
    if (qubits_per_register == 0) {
        throw std::invalid_argument("registers must hold at least one qubit");
    }
    CircuitSpec c;
    c.n_qubits = n_registers * qubits_per_register;
    c.registers = detail::even_registers(n_registers, qubits_per_register);
    for (std::size_t rep = 0; rep < n_repetitions; ++rep) {
        detail::append_correlation_block(c, n_registers, qubits_per_register, choice);
        for (std::size_t r = 0; r < n_registers; ++r) {
            detail::append_ry_layer(c, r * qubits_per_register, qubits_per_register);
            detail::append_cnot_chain(c, r * qubits_per_register, qubits_per_register);
        }
    }
    detail::append_ry_layer(c, 0, c.n_qubits);
    return c;
}

/// RY(data) feature map on every qubit followed by the RY/RX layered ansatz.
inline CircuitSpec build_conditional(std::size_t n_qubits, std::size_t n_layers) {
    CircuitSpec body = build_hardware_efficient(n_qubits, n_layers, true);
    CircuitSpec c;
    c.n_qubits = n_qubits;
    c.registers = body.registers;
    c.n_parameters = body.n_parameters;
    c.n_data_slots = n_qubits;
    for (std::size_t q = 0; q < n_qubits; ++q) {
        c.gates.push_back(Gate::data(GateKind::RY, {q}, q));
    }
    c.gates.insert(c.gates.end(), body.gates.begin(), body.gates.end());
    return c;
}

/// arcsin of the min-max scaled incoming energy; angle in [0, pi/2].
inline double encode_condition(double e_in, double e_min, double e_max) {
    if (!(e_min < e_max)) {
        throw std::invalid_argument("condition range requires e_min < e_max");
    }
    if (e_in < e_min || e_in > e_max) {
        throw std::out_of_range("condition " + std::to_string(e_in) + " outside [" +
                                std::to_string(e_min) + ", " + std::to_string(e_max) + "]");
    }
    return std::asin((e_in - e_min) / (e_max - e_min));
}

} // namespace qcbm
