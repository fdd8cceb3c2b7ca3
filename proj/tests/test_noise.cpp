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

#include <gtest/gtest.h>

#include <random>

#include "qcbm/circuits.hpp"
#include "qcbm/metrics.hpp"
#include "qcbm/noise.hpp"
#include "support.hpp"

using namespace qcbm;

namespace {

NoiseConfig readout_only(double e) { return {{e}, 0.0, 0, 1}; }

NoiseConfig depol_only(double q, std::size_t trajectories, std::uint64_t seed = 1) {
    return {{0.0}, q, seed, trajectories};
}

std::vector<double> random_theta(std::size_t n, std::mt19937_64 &rng) {
    std::vector<double> t(n);
    for (double &x : t) {
        x = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
    }
    return t;
}

} // namespace

TEST(Readout, Examples) {
    const auto p = DiscreteDistribution::flat({0.3, 0.7});
    EXPECT_EQ(apply_readout_noise(p, readout_only(0.0)).probs, p.probs);
    const auto one = apply_readout_noise(DiscreteDistribution::flat({1, 0}), readout_only(0.1));
    EXPECT_NEAR(one.probs[0], 0.9, 1e-15);
    EXPECT_NEAR(one.probs[1], 0.1, 1e-15);
    const auto two = apply_readout_noise(DiscreteDistribution::flat({1, 0, 0, 0}), readout_only(0.1));
    const std::vector<double> expect{0.81, 0.09, 0.09, 0.01};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(two.probs[i], expect[i], 1e-15);
    }
    EXPECT_THROW(apply_readout_noise(p, readout_only(0.5)), std::invalid_argument);
}

TEST(Readout, PerQubitRatesMatchDenseTensorProduct) {
    std::mt19937_64 rng(3);
    NoiseConfig cfg{{0.01, 0.05, 0.2}, 0.0, 0, 1};
    const auto p = DiscreteDistribution::flat(qcbm::testing::random_simplex(8, rng));
    const auto got = apply_readout_noise(p, cfg);
    for (std::size_t obs = 0; obs < 8; ++obs) {
        double expect = 0.0;
        for (std::size_t tru = 0; tru < 8; ++tru) {
            double m = 1.0;
            for (std::size_t q = 0; q < 3; ++q) {
                const double e = cfg.readout_flip_prob[q];
                m *= (((obs ^ tru) >> q) & 1) ? e : 1 - e;
            }
            expect += m * p.probs[tru];
        }
        EXPECT_NEAR(got.probs[obs], expect, 1e-15);
    }
}

TEST(ReadoutProperty, Stochastic) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const double e = std::uniform_real_distribution<double>(0, 0.499)(rng);
        const auto out = apply_readout_noise(DiscreteDistribution::flat(qcbm::testing::random_simplex(16, rng)),
                                             readout_only(e));
        EXPECT_NEAR(out.sum(), 1.0, 1e-12);
        for (double v : out.probs) {
            EXPECT_GE(v, 0.0);
        }
    }
}

TEST(Confusion, ExactMatrixMatchesChannel) {
    const auto cm = readout_confusion_matrix(2, readout_only(0.1));
    EXPECT_NEAR(cm.matrix(0, 0), 0.81, 1e-15);
    EXPECT_NEAR(cm.matrix(1, 0), 0.09, 1e-15);
    EXPECT_NEAR(cm.matrix(3, 0), 0.01, 1e-15);
    for (Eigen::Index c = 0; c < 4; ++c) {
        EXPECT_NEAR(cm.matrix.col(c).sum(), 1.0, 1e-15);
    }
}

TEST(Confusion, EstimatedNoiselessIsIdentity) {
    const auto cm = estimate_confusion_matrix(3, NoiseConfig::noiseless(), 1000);
    EXPECT_TRUE(cm.matrix.isApprox(Eigen::MatrixXd::Identity(8, 8)));
}

TEST(Confusion, EstimatedConverges) {
    NoiseConfig cfg = readout_only(0.1);
    cfg.seed = 99;
    const auto cm = estimate_confusion_matrix(1, cfg, 1000000);
    EXPECT_NEAR(cm.matrix(0, 0), 0.9, 0.005);
    EXPECT_NEAR(cm.matrix(1, 0), 0.1, 0.005);
    EXPECT_NEAR(cm.matrix(0, 1), 0.1, 0.005);
    EXPECT_NEAR(cm.matrix(1, 1), 0.9, 0.005);
}

TEST(Mitigation, Examples) {
    const auto p = DiscreteDistribution::flat({0.2, 0.3, 0.5, 0.0});
    const ConfusionMatrix identity{2, Eigen::MatrixXd::Identity(4, 4)};
    EXPECT_EQ(mitigate_readout(p, identity).distribution.probs, p.probs);
    const auto r = mitigate_readout(DiscreteDistribution::flat({0.9, 0.1}), readout_confusion_matrix(1, readout_only(0.1)));
    EXPECT_NEAR(r.distribution.probs[0], 1.0, 1e-10);
    EXPECT_NEAR(r.distribution.probs[1], 0.0, 1e-10);
}

TEST(Mitigation, ClipsNegativeSolutions) {
    // (1, 0) observed under e = 0.1 would need a true vector with a negative entry.
    const auto r = mitigate_readout(DiscreteDistribution::flat({1.0, 0.0}), readout_confusion_matrix(1, readout_only(0.1)));
    EXPECT_TRUE(r.clipped);
    EXPECT_EQ(r.distribution.probs[0], 1.0);
    EXPECT_EQ(r.distribution.probs[1], 0.0);
}

TEST(Mitigation, SingularMatrixThrows) {
    const ConfusionMatrix bad{1, Eigen::MatrixXd::Constant(2, 2, 0.5)};
    EXPECT_THROW(mitigate_readout(DiscreteDistribution::flat({0.5, 0.5}), bad), std::domain_error);
}

TEST(MitigationProperty, ExactRoundTrip) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = DiscreteDistribution::flat(qcbm::testing::random_simplex(16, rng));
        const auto cfg = readout_only(0.029);
        const auto back = mitigate_readout(apply_readout_noise(p, cfg), readout_confusion_matrix(4, cfg));
        for (std::size_t i = 0; i < 16; ++i) {
            EXPECT_NEAR(back.distribution.probs[i], p.probs[i], 1e-10);
        }
    }
}

TEST(Depolarizing, ZeroRateIsExact) {
    std::mt19937_64 rng(2);
    const auto c = build_hardware_efficient(3, 2, false);
    const auto theta = random_theta(c.n_parameters, rng);
    const auto p = apply_cnot_depolarizing(c, theta, {}, depol_only(0.0, 10));
    EXPECT_EQ(p.probs, run_circuit(c, theta).probabilities());
}

TEST(Depolarizing, FullRateOnSingleCnotIsUniform) {
    CircuitSpec c;
    c.n_qubits = 2;
    c.gates = {Gate::fixed(GateKind::CNOT, {0, 1})};
    const auto p = apply_cnot_depolarizing(c, {}, {}, depol_only(1.0, 4000, 3));
    for (double v : p.probs) {
        EXPECT_NEAR(v, 0.25, 0.02);
    }
}

TEST(Depolarizing, MatchesDensityMatrixOracle) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 3; ++trial) {
        const auto c = trial == 0 ? build_1d_rzz_ansatz(3) : build_hardware_efficient(3, 2, true);
        const auto theta = random_theta(c.n_parameters, rng);
        for (double q : {0.01, 0.2}) {
            const auto got = apply_cnot_depolarizing(c, theta, {}, depol_only(q, 10000, 11 + trial));
            const auto expect = DiscreteDistribution::flat(qcbm::testing::depolarized_probabilities(c, theta, q));
            EXPECT_LE(total_variance(got, expect), 0.02) << trial << " q=" << q;
        }
    }
}

TEST(Depolarizing, CountsRzzAsTwoQubitEvent) {
    // A lone RZZ keeps |00> a point mass; depolarizing after it spreads the mass.
    CircuitSpec c;
    c.n_qubits = 2;
    c.n_parameters = 1;
    c.gates = {Gate::trainable(GateKind::RZZ, {0, 1}, 0)};
    const std::vector<double> theta{0.4};
    const auto p = apply_cnot_depolarizing(c, theta, {}, depol_only(0.5, 20000, 4));
    const auto expect = qcbm::testing::depolarized_probabilities(c, theta, 0.5);
    EXPECT_NEAR(expect[0], 1.0 - 0.5 * 0.75, 1e-12);
    EXPECT_NEAR(p.probs[0], expect[0], 0.01);
}

TEST(DepolarizingProperty, MovesTowardUniform) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = build_hardware_efficient(3, 3, false);
        const auto theta = random_theta(c.n_parameters, rng);
        const auto exact = DiscreteDistribution::flat(run_circuit(c, theta).probabilities());
        const auto noisy = DiscreteDistribution::flat(qcbm::testing::depolarized_probabilities(c, theta, 0.05));
        const auto uniform = DiscreteDistribution::flat(std::vector<double>(8, 0.125));
        EXPECT_LE(total_variance(noisy, uniform), total_variance(exact, uniform) + 1e-12);
        // The Monte Carlo channel agrees in direction.
        const auto mc = apply_cnot_depolarizing(c, theta, {}, depol_only(0.05, 5000, trial));
        EXPECT_LE(total_variance(mc, uniform), total_variance(exact, uniform) + 1e-3);
    }
}

TEST(Depolarizing, SeedDeterminism) {
    const auto c = build_1d_rzz_ansatz(3);
    const std::vector<double> theta(c.n_parameters, 0.7);
    EXPECT_EQ(apply_cnot_depolarizing(c, theta, {}, depol_only(0.1, 100, 5)).probs,
              apply_cnot_depolarizing(c, theta, {}, depol_only(0.1, 100, 5)).probs);
}

TEST(MitigationProperty, SampledMitigationUsuallyHelps) {
    std::mt19937_64 rng(21);
    const auto c = build_1d_rzz_ansatz(4);
    const auto truth = DiscreteDistribution::flat(run_circuit(c, random_theta(c.n_parameters, rng)).probabilities());
    const auto cfg = readout_only(0.029);
    const auto noisy = apply_readout_noise(truth, cfg);
    const auto cm = readout_confusion_matrix(4, cfg);
    int better = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto shots = sampled_distribution(noisy, 100000, seed);
        better += total_variance(mitigate_readout(shots, cm).distribution, truth) <= total_variance(shots, truth);
    }
    EXPECT_GE(better, 95);
}
