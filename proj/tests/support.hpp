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
// Test-side oracles. Nothing here calls into the code paths it checks.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qcbm/circuit_spec.hpp"
#include "qcbm/core.hpp"

namespace qcbm::testing {

using Mat = Eigen::MatrixXcd;
using cd = std::complex<double>;

/// 2x2 single-qubit matrices written out from their definitions.
inline Eigen::Matrix2cd gate_matrix_1q(GateKind kind, double t) {
    const double c = std::cos(t / 2);
    const double s = std::sin(t / 2);
    Eigen::Matrix2cd m;
    switch (kind) {
    case GateKind::RY:
        m << c, -s, s, c;
        break;
    case GateKind::RX:
        m << c, cd(0, -s), cd(0, -s), c;
        break;
    case GateKind::H:
        m << 1, 1, 1, -1;
        m /= std::sqrt(2.0);
        break;
    default:
        throw std::invalid_argument("not a one-qubit gate");
    }
    return m;
}

/// Full 2^n x 2^n operator of a gate, built by enumerating basis states.
inline Mat full_operator(const Gate &g, std::size_t n, double angle) {
    const std::size_t dim = std::size_t{1} << n;
    Mat u = Mat::Zero(dim, dim);
    for (std::size_t col = 0; col < dim; ++col) {
        if (arity(g.kind) == 1) {
            const auto m = gate_matrix_1q(g.kind, angle);
            const std::size_t q = g.targets[0];
            const std::size_t bit = (col >> q) & 1;
            for (std::size_t out = 0; out < 2; ++out) {
                const std::size_t row = (col & ~(std::size_t{1} << q)) | (out << q);
                u(row, col) += m(out, bit);
            }
        } else if (g.kind == GateKind::CNOT) {
            const std::size_t row = ((col >> g.targets[0]) & 1) ? col ^ (std::size_t{1} << g.targets[1]) : col;
            u(row, col) = 1;
        } else {
            const int za = ((col >> g.targets[0]) & 1) ? -1 : 1;
            const int zb = ((col >> g.targets[1]) & 1) ? -1 : 1;
            u(col, col) = std::exp(cd(0, -angle * za * zb));
        }
    }
    return u;
}

/// Dense circuit unitary from the gate list.
inline Mat circuit_unitary(const CircuitSpec &c, const std::vector<double> &theta,
                           const std::vector<double> &data = {}) {
    const std::size_t dim = std::size_t{1} << c.n_qubits;
    Mat u = Mat::Identity(dim, dim);
    for (const auto &g : c.gates) {
        double angle = 0.0;
        if (g.source == SlotSource::trainable) {
            angle = theta.at(g.slot);
        } else if (g.source == SlotSource::data) {
            angle = data.at(g.slot);
        }
        u = full_operator(g, c.n_qubits, angle) * u;
    }
    return u;
}

inline std::vector<double> unitary_probabilities(const CircuitSpec &c, const std::vector<double> &theta,
                                                 const std::vector<double> &data = {}) {
    const Mat u = circuit_unitary(c, theta, data);
    std::vector<double> p(static_cast<std::size_t>(u.rows()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::norm(u(static_cast<Eigen::Index>(i), 0));
    }
    return p;
}

/**
 * Density-matrix evolution with a two-qubit depolarizing channel
 * rho -> (1-q) rho + q (Tr_ab rho) (x) I/4 after every two-qubit gate.
 * Written as the Pauli-twirl sum (1-q) rho + q/16 sum_P P rho P.
 */
inline std::vector<double> depolarized_probabilities(const CircuitSpec &c, const std::vector<double> &theta,
                                                     double q) {
    const std::size_t n = c.n_qubits;
    const std::size_t dim = std::size_t{1} << n;
    Mat rho = Mat::Zero(dim, dim);
    rho(0, 0) = 1;
    std::array<Eigen::Matrix2cd, 4> paulis;
    paulis[0] = Eigen::Matrix2cd::Identity();
    paulis[1] << 0, 1, 1, 0;
    paulis[2] << 0, cd(0, -1), cd(0, 1), 0;
    paulis[3] << 1, 0, 0, -1;
    auto embed = [&](const Eigen::Matrix2cd &m, std::size_t qubit) {
        Mat u = Mat::Zero(dim, dim);
        for (std::size_t col = 0; col < dim; ++col) {
            const std::size_t bit = (col >> qubit) & 1;
            for (std::size_t out = 0; out < 2; ++out) {
                u((col & ~(std::size_t{1} << qubit)) | (out << qubit), col) += m(out, bit);
            }
        }
        return u;
    };
    for (const auto &g : c.gates) {
        const double angle = g.source == SlotSource::trainable ? theta.at(g.slot) : 0.0;
        const Mat u = full_operator(g, n, angle);
        rho = u * rho * u.adjoint();
        if (arity(g.kind) == 2) {
            Mat twirl = Mat::Zero(dim, dim);
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    const Mat p = embed(paulis[a], g.targets[0]) * embed(paulis[b], g.targets[1]);
                    twirl += p * rho * p.adjoint();
                }
            }
            rho = (1.0 - q) * rho + (q / 16.0) * twirl;
        }
    }
    std::vector<double> p(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        p[i] = rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    }
    return p;
}

/// Random circuit over all gate kinds with `n_params` trainable slots, each used once.
inline CircuitSpec random_circuit(std::size_t n_qubits, std::size_t n_params, std::size_t n_fixed,
                                  std::mt19937_64 &rng) {
    CircuitSpec c;
    c.n_qubits = n_qubits;
    c.n_parameters = n_params;
    std::uniform_int_distribution<std::size_t> qubit(0, n_qubits - 1);
    auto pair = [&]() {
        std::size_t a = qubit(rng);
        std::size_t b = qubit(rng);
        while (b == a) {
            b = qubit(rng);
        }
        return std::vector<std::size_t>{a, b};
    };
    std::vector<Gate> gates;
    const GateKind kinds[] = {GateKind::RY, GateKind::RX, GateKind::RZZ};
    for (std::size_t s = 0; s < n_params; ++s) {
        const GateKind k = n_qubits > 1 ? kinds[rng() % 3] : kinds[rng() % 2];
        gates.push_back(Gate::trainable(k, k == GateKind::RZZ ? pair() : std::vector<std::size_t>{qubit(rng)}, s));
    }
    for (std::size_t f = 0; f < n_fixed; ++f) {
        if (n_qubits > 1 && rng() % 2) {
            gates.push_back(Gate::fixed(GateKind::CNOT, pair()));
        } else {
            gates.push_back(Gate::fixed(GateKind::H, {qubit(rng)}));
        }
    }
    std::shuffle(gates.begin(), gates.end(), rng);
    c.gates = std::move(gates);
    c.validate();
    return c;
}

/// Fourth-order central difference: (8[f(x+h)-f(x-h)] - [f(x+2h)-f(x-2h)]) / 12h.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double> &)> &f,
                                             const std::vector<double> &x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto at = [&](double d) {
            auto y = x;
            y[i] += d;
            return f(y);
        };
        g[i] = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    }
    return g;
}

/// |a - b| / max(|b|, floor).
inline double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max(std::abs(b), floor);
}

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64 &rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(n);
    double s = 0.0;
    for (double &x : p) {
        x = e(rng);
        s += x;
    }
    for (double &x : p) {
        x /= s;
    }
    return p;
}

} // namespace qcbm::testing
