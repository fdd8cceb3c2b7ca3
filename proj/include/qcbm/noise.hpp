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
 * Distribution-level device noise: independent readout bit flips, a
 * two-qubit depolarizing channel after each CNOT sampled as trajectories,
 * and confusion-matrix readout mitigation.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "qcbm/born.hpp"
#include "qcbm/core.hpp"
#include "qcbm/distribution.hpp"
#include "qcbm/sim.hpp"

namespace qcbm {

struct NoiseConfig {
    /// One entry applies to every qubit; otherwise one entry per qubit.
    std::vector<double> readout_flip_prob{0.029};
    double cnot_depol_prob{0.01};
    std::uint64_t seed{0};
    std::size_t trajectories{2000};

    [[nodiscard]] double flip_for(std::size_t qubit) const {
        if (readout_flip_prob.empty()) {
            return 0.0;
        }
        if (readout_flip_prob.size() == 1) {
            return readout_flip_prob.front();
        }
        return readout_flip_prob.at(qubit);
    }

    void validate() const {
        for (double e : readout_flip_prob) {
            if (!(e >= 0.0 && e < 0.5)) {
                throw std::invalid_argument("readout flip probability must lie in [0, 0.5)");
            }
        }
        if (!(cnot_depol_prob >= 0.0 && cnot_depol_prob <= 1.0)) {
            throw std::invalid_argument("CNOT depolarizing probability must lie in [0, 1]");
        }
        if (trajectories == 0) {
            throw std::invalid_argument("trajectory count must be positive");
        }
    }

    /// Same configuration without any noise.
    static NoiseConfig noiseless() { return {{0.0}, 0.0, 0, 1}; }
};

/// M = (x)_q [[1-e_q, e_q], [e_q, 1-e_q]] applied to p, one qubit at a time.
inline DiscreteDistribution apply_readout_noise(const DiscreteDistribution &p_true,
                                                const NoiseConfig &config) {
    config.validate();
    DiscreteDistribution out = p_true;
    const unsigned n = out.total_bits();
    for (unsigned q = 0; q < n; ++q) {
        const double e = config.flip_for(q);
        if (e == 0.0) {
            continue;
        }
        const std::size_t mask = std::size_t{1} << q;
        for (std::size_t b = 0; b < out.size(); ++b) {
            if (b & mask) {
                continue;
            }
            const double a0 = out.probs[b];
            const double a1 = out.probs[b | mask];
            out.probs[b] = (1.0 - e) * a0 + e * a1;
            out.probs[b | mask] = e * a0 + (1.0 - e) * a1;
        }
    }
    return out;
}

/// Column-stochastic readout matrix, matrix(observed, true).
struct ConfusionMatrix {
    std::size_t n_qubits{0};
    Eigen::MatrixXd matrix;
};

/// Exact tensor-product confusion matrix of the readout model.
inline ConfusionMatrix readout_confusion_matrix(std::size_t n_qubits, const NoiseConfig &config) {
    config.validate();
    const std::size_t dim = std::size_t{1} << n_qubits;
    ConfusionMatrix cm{n_qubits, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                       static_cast<Eigen::Index>(dim))};
    for (std::size_t obs = 0; obs < dim; ++obs) {
        for (std::size_t tru = 0; tru < dim; ++tru) {
            double v = 1.0;
            for (std::size_t q = 0; q < n_qubits; ++q) {
                const double e = config.flip_for(q);
                v *= (((obs ^ tru) >> q) & 1U) ? e : 1.0 - e;
            }
            cm.matrix(static_cast<Eigen::Index>(obs), static_cast<Eigen::Index>(tru)) = v;
        }
    }
    return cm;
}

/**
 * Calibration by simulation: prepares every basis state, reads it out
 * `shots_per_basis_state` times through the flip model and records the
 * observed frequencies as that state's column.
 */
inline ConfusionMatrix estimate_confusion_matrix(std::size_t n_qubits, const NoiseConfig &config,
                                                 std::size_t shots_per_basis_state) {
    config.validate();
    if (shots_per_basis_state == 0) {
        throw std::invalid_argument("calibration needs at least one shot per basis state");
    }
    const std::size_t dim = std::size_t{1} << n_qubits;
    ConfusionMatrix cm{n_qubits, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                       static_cast<Eigen::Index>(dim))};
    for (std::size_t tru = 0; tru < dim; ++tru) {
        Rng rng = derive_rng(config.seed, tru);
        for (std::size_t s = 0; s < shots_per_basis_state; ++s) {
            std::size_t obs = tru;
            for (std::size_t q = 0; q < n_qubits; ++q) {
                if (uniform01(rng) < config.flip_for(q)) {
                    obs ^= std::size_t{1} << q;
                }
            }
            cm.matrix(static_cast<Eigen::Index>(obs), static_cast<Eigen::Index>(tru)) += 1.0;
        }
    }
    cm.matrix /= static_cast<double>(shots_per_basis_state);
    return cm;
}

struct MitigationResult {
    DiscreteDistribution distribution;
    bool clipped{false}; ///< negative entries were zeroed and the rest renormalized
};

/// Solves M p = p_noisy, then clips negatives and renormalizes.
inline MitigationResult mitigate_readout(const DiscreteDistribution &p_noisy,
                                         const ConfusionMatrix &cm) {
    const auto dim = static_cast<Eigen::Index>(p_noisy.size());
    if (cm.matrix.rows() != dim || cm.matrix.cols() != dim) {
        throw std::invalid_argument("confusion matrix does not match distribution size");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cm.matrix);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
        throw std::domain_error("confusion matrix is singular");
    }
    const Eigen::Map<const Eigen::VectorXd> rhs(p_noisy.probs.data(), dim);
    const Eigen::VectorXd x = lu.solve(rhs);
    MitigationResult result{p_noisy, false};
    double total = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        double v = x(i);
        if (v < 0.0) {
            result.clipped = result.clipped || v < -1e-15;
            v = 0.0;
        }
        result.distribution.probs[static_cast<std::size_t>(i)] = v;
        total += v;
    }
    if (!(total > 0.0)) {
        throw std::domain_error("mitigated distribution has no positive mass");
    }
    for (double &v : result.distribution.probs) {
        v /= total;
    }
    return result;
}

/**
 * Circuit distribution with a two-qubit depolarizing event after each
 * two-qubit gate (CNOT or RZZ): with probability q a uniformly random
 * two-qubit Pauli (identity included) hits the gate's qubits, which averages that pair to the maximally mixed
 * state. The error-free branch is weighted exactly and only trajectories
 * with at least one event are sampled, one RNG stream per trajectory.
 */
inline DiscreteDistribution apply_cnot_depolarizing(const CircuitSpec &circuit,
                                                    std::span<const double> theta,
                                                    std::span<const double> data_angles,
                                                    const NoiseConfig &config,
                                                    std::optional<GateShift> shift = std::nullopt) {
    config.validate();
    const State exact_state = run_circuit(circuit, theta, data_angles, shift);
    DiscreteDistribution exact{exact_state.probabilities(), circuit.register_bits()};
    const std::size_t k = circuit.count(GateKind::CNOT) + circuit.count(GateKind::RZZ);
    const double q = config.cnot_depol_prob;
    if (k == 0 || q == 0.0) {
        return exact;
    }
    const double p_clean = std::pow(1.0 - q, static_cast<double>(k));
    const double p_error = 1.0 - p_clean;

    std::vector<double> noisy_sum(exact.size(), 0.0);
    std::vector<bool> hit(k);
    for (std::size_t t = 0; t < config.trajectories; ++t) {
        Rng rng = derive_rng(config.seed, t);
        // First event index j has probability (1-q)^j q / p_error.
        const double u = uniform01(rng) * p_error;
        std::size_t first = k - 1;
        double cdf = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            cdf += std::pow(1.0 - q, static_cast<double>(j)) * q;
            if (u < cdf) {
                first = j;
                break;
            }
        }
        for (std::size_t j = 0; j < k; ++j) {
            hit[j] = j == first || (j > first && uniform01(rng) < q);
        }
        State state(circuit.n_qubits);
        std::size_t event = 0;
        for (std::size_t gi = 0; gi < circuit.gates.size(); ++gi) {
            const Gate &g = circuit.gates[gi];
            state.apply(g, gate_angle(g, gi, theta, data_angles, shift));
            if (arity(g.kind) == 2) {
                if (hit[event]) {
                    const auto pauli = static_cast<int>(rng() % 16);
                    for (int side = 0; side < 2; ++side) {
                        const int which = side == 0 ? pauli % 4 : pauli / 4;
                        if (which != 0) {
                            state.apply_pauli(g.targets[static_cast<std::size_t>(side)], which - 1);
                        }
                    }
                }
                ++event;
            }
        }
        const auto p = state.probabilities();
        for (std::size_t i = 0; i < p.size(); ++i) {
            noisy_sum[i] += p[i];
        }
    }
    DiscreteDistribution out = exact;
    const double w = p_error / static_cast<double>(config.trajectories);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.probs[i] = p_clean * exact.probs[i] + w * noisy_sum[i];
    }
    return out;
}

/// Depolarizing trajectories followed by the readout channel.
inline DiscreteDistribution noisy_model_distribution(const BornModel &model,
                                                     std::optional<double> condition,
                                                     const NoiseConfig &config) {
    const auto data = model.data_angles(condition);
    auto p = apply_cnot_depolarizing(model.circuit, model.theta, data, config);
    p.condition = condition;
    return apply_readout_noise(p, config);
}

/// Empirical distribution of `shots` draws from `dist`.
inline DiscreteDistribution sampled_distribution(const DiscreteDistribution &dist,
                                                 std::size_t shots, std::uint64_t seed) {
    return histogram_of(sample(dist, shots, seed), dist);
}

} // namespace qcbm
