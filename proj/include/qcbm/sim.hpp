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
 * Dense statevector simulation. Qubit 0 is the least significant bit of
 * the basis index.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcbm/circuit_spec.hpp"
#include "qcbm/core.hpp"
#include "qcbm/distribution.hpp"

namespace qcbm {

inline constexpr std::size_t kMaxQubits = 20;

template <std::floating_point T> class StateVector {
  public:
    using complex_type = std::complex<T>;

    /// |0...0> on n qubits.
    explicit StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits == 0 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("qubit count must be in [1, " +
                                        std::to_string(kMaxQubits) + "]");
        }
        amplitudes_.assign(std::size_t{1} << n_qubits, complex_type{0});
        amplitudes_[0] = complex_type{1};
    }

    StateVector(std::size_t n_qubits, std::vector<complex_type> amplitudes)
        : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != (std::size_t{1} << n_qubits)) {
            throw std::invalid_argument("amplitude count must equal 2^n_qubits");
        }
    }

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] std::size_t size() const { return amplitudes_.size(); }
    [[nodiscard]] std::span<const complex_type> amplitudes() const { return amplitudes_; }
    [[nodiscard]] const complex_type &operator[](std::size_t i) const { return amplitudes_[i]; }

    [[nodiscard]] T norm_squared() const {
        T acc{0};
        for (const auto &a : amplitudes_) {
            acc += std::norm(a);
        }
        return acc;
    }

    /// Applies `gate` in place. `angle` must be given iff the gate is parameterized.
    void apply(const Gate &gate, std::optional<T> angle = std::nullopt) {
        check_gate(gate, angle.has_value());
        switch (gate.kind) {
        case GateKind::RY:
            apply_ry(gate.targets[0], *angle);
            break;
        case GateKind::RX:
            apply_rx(gate.targets[0], *angle);
            break;
        case GateKind::RZZ:
            apply_rzz(gate.targets[0], gate.targets[1], *angle);
            break;
        case GateKind::CNOT:
            apply_cnot(gate.targets[0], gate.targets[1]);
            break;
        case GateKind::H:
            apply_h(gate.targets[0]);
            break;
        }
    }

    /// Pauli X, Y or Z (0, 1, 2) on one qubit; used by noise trajectories.
    void apply_pauli(std::size_t qubit, int which) {
        check_qubit(qubit);
        const std::size_t mask = std::size_t{1} << qubit;
        const complex_type i_unit{0, 1};
        for (std::size_t b = 0; b < amplitudes_.size(); ++b) {
            if (b & mask) {
                continue;
            }
            auto &a0 = amplitudes_[b];
            auto &a1 = amplitudes_[b | mask];
            switch (which) {
            case 0:
                std::swap(a0, a1);
                break;
            case 1: {
                const complex_type n0 = -i_unit * a1;
                const complex_type n1 = i_unit * a0;
                a0 = n0;
                a1 = n1;
                break;
            }
            case 2:
                a1 = -a1;
                break;
            default:
                throw std::invalid_argument("Pauli selector must be 0, 1 or 2");
            }
        }
    }

    /// Born-rule probabilities |<b|psi>|^2 in basis-index order.
    [[nodiscard]] std::vector<double> probabilities() const {
        std::vector<double> p(amplitudes_.size());
        for (std::size_t b = 0; b < amplitudes_.size(); ++b) {
            p[b] = static_cast<double>(std::norm(amplitudes_[b]));
        }
        return p;
    }

  private:
    void check_qubit(std::size_t q) const {
        if (q >= n_qubits_) {
            throw std::out_of_range("qubit " + std::to_string(q) + " out of range for " +
                                    std::to_string(n_qubits_) + "-qubit state");
        }
    }

    void check_gate(const Gate &gate, bool has_angle) const {
        if (gate.targets.size() != arity(gate.kind)) {
            throw std::invalid_argument(std::string(to_string(gate.kind)) + " expects " +
                                        std::to_string(arity(gate.kind)) + " target(s)");
        }
        for (std::size_t t : gate.targets) {
            check_qubit(t);
        }
        if (gate.targets.size() == 2 && gate.targets[0] == gate.targets[1]) {
            throw std::invalid_argument("duplicate targets on two-qubit gate");
        }
        if (is_parameterized(gate.kind) && !has_angle) {
            throw std::invalid_argument(std::string(to_string(gate.kind)) + " requires an angle");
        }
        if (!is_parameterized(gate.kind) && has_angle) {
            throw std::invalid_argument(std::string(to_string(gate.kind)) + " takes no angle");
        }
    }

    void apply_ry(std::size_t q, T theta) {
        const T c = std::cos(theta / 2);
        const T s = std::sin(theta / 2);
        const std::size_t mask = std::size_t{1} << q;
        for (std::size_t b = 0; b < amplitudes_.size(); ++b) {
            if (b & mask) {
                continue;
            }
            const complex_type a0 = amplitudes_[b];
            const complex_type a1 = amplitudes_[b | mask];
            amplitudes_[b] = c * a0 - s * a1;
            amplitudes_[b | mask] = s * a0 + c * a1;
        }
    }

    void apply_rx(std::size_t q, T theta) {
        const T c = std::cos(theta / 2);
        const complex_type mis{0, -std::sin(theta / 2)};
        const std::size_t mask = std::size_t{1} << q;
        for (std::size_t b = 0; b < amplitudes_.size(); ++b) {
            if (b & mask) {
                continue;
            }
            const complex_type a0 = amplitudes_[b];
            const complex_type a1 = amplitudes_[b | mask];
            amplitudes_[b] = c * a0 + mis * a1;
            amplitudes_[b | mask] = mis * a0 + c * a1;
        }
    }

    // exp(-i theta Z_a Z_b): phase e^{-i theta} on even parity, e^{+i theta} on odd.
    void apply_rzz(std::size_t qa, std::size_t qb, T theta) {
        const complex_type even = std::polar(T{1}, -theta);
        const complex_type odd = std::polar(T{1}, theta);
        for (std::size_t b = 0; b < amplitudes_.size(); ++b) {
            const bool parity = (((b >> qa) ^ (b >> qb)) & 1U) != 0;
            amplitudes_[b] *= parity ? odd : even;
        }
    }

    void apply_cnot(std::size_t control, std::size_t target) {
        const std::size_t cmask = std::size_t{1} << control;
        const std::size_t tmask = std::size_t{1} << target;
        for (std::size_t b = 0; b < amplitudes_.size(); ++b) {
            if ((b & cmask) && !(b & tmask)) {
                std::swap(amplitudes_[b], amplitudes_[b | tmask]);
            }
        }
    }

    void apply_h(std::size_t q) {
        const T r = T{1} / std::sqrt(T{2});
        const std::size_t mask = std::size_t{1} << q;
        for (std::size_t b = 0; b < amplitudes_.size(); ++b) {
            if (b & mask) {
                continue;
            }
            const complex_type a0 = amplitudes_[b];
            const complex_type a1 = amplitudes_[b | mask];
            amplitudes_[b] = r * (a0 + a1);
            amplitudes_[b | mask] = r * (a0 - a1);
        }
    }

    std::size_t n_qubits_;
    std::vector<complex_type> amplitudes_;
};

using State = StateVector<double>;

/// Value-returning form of StateVector::apply.
template <std::floating_point T>
StateVector<T> apply_gate(StateVector<T> state, const Gate &gate,
                          std::optional<T> angle = std::nullopt) {
    state.apply(gate, angle);
    return state;
}

/// Adds `offset` to the angle of the gate at `gate_index` only.
struct GateShift {
    std::size_t gate_index{0};
    double offset{0.0};
};

/// Angle of gate `index` (nullopt for fixed gates), including any shift.
inline std::optional<double> gate_angle(const Gate &g, std::size_t index,
                                        std::span<const double> theta,
                                        std::span<const double> data_angles,
                                        std::optional<GateShift> shift) {
    std::optional<double> angle;
    if (g.source == SlotSource::trainable) {
        angle = theta[g.slot];
    } else if (g.source == SlotSource::data) {
        angle = data_angles[g.slot];
    }
    if (angle && shift && shift->gate_index == index) {
        *angle += shift->offset;
    }
    return angle;
}

/**
 * Runs `circuit` on |0...0>. Trainable gates read `theta[slot]`, feature-map
 * gates read `data_angles[slot]`.
 */
inline State run_circuit(const CircuitSpec &circuit, std::span<const double> theta,
                         std::span<const double> data_angles = {},
                         std::optional<GateShift> shift = std::nullopt) {
    if (theta.size() != circuit.n_parameters) {
        throw std::invalid_argument("expected " + std::to_string(circuit.n_parameters) +
                                    " parameters, got " + std::to_string(theta.size()));
    }
    if (data_angles.size() != circuit.n_data_slots) {
        throw std::invalid_argument("expected " + std::to_string(circuit.n_data_slots) +
                                    " data angles, got " + std::to_string(data_angles.size()));
    }
    State state(circuit.n_qubits);
    for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
        const Gate &g = circuit.gates[i];
        state.apply(g, gate_angle(g, i, theta, data_angles, shift));
    }
    return state;
}

/// Single-register distribution of a state.
template <std::floating_point T> DiscreteDistribution probabilities(const StateVector<T> &state) {
    return {state.probabilities(), {static_cast<unsigned>(state.n_qubits())}};
}

/// Draws `n_shots` bin indices from `dist`; reproducible for a fixed seed.
inline std::vector<std::size_t> sample(const DiscreteDistribution &dist, std::size_t n_shots,
                                       std::uint64_t seed) {
    if (n_shots == 0) {
        throw std::invalid_argument("n_shots must be at least 1");
    }
    std::vector<double> cdf(dist.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += std::max(dist.probs[i], 0.0);
        cdf[i] = acc;
    }
    Rng rng(seed);
    std::vector<std::size_t> out(n_shots);
    for (auto &o : out) {
        const double u = uniform01(rng) * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        o = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), dist.size() - 1);
    }
    return out;
}

} // namespace qcbm
