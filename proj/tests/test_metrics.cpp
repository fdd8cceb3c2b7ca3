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

#include <cmath>
#include <random>

#include "qcbm/circuits.hpp"
#include "qcbm/metrics.hpp"
#include "support.hpp"

using namespace qcbm;

namespace {

const KernelConfig kDefaultKernel{};
const KernelConfig kUnitKernel{{1.0}};

/// sum_ij (p_i - q_i)(p_j - q_j) k(x_i, x_j) with the kernel written out per bandwidth.
double brute_mmd(const DiscreteDistribution &p, const DiscreteDistribution &q, const std::vector<double> &sigmas) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto xi = p.bin_tuple(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const auto xj = p.bin_tuple(j);
            double d2 = 0.0;
            for (std::size_t f = 0; f < xi.size(); ++f) {
                const double d = static_cast<double>(xi[f]) - static_cast<double>(xj[f]);
                d2 += d * d;
            }
            double k = 0.0;
            for (double s : sigmas) {
                k += std::exp(-d2 / (2 * s));
            }
            total += (p.probs[i] - q.probs[i]) * (p.probs[j] - q.probs[j]) * k;
        }
    }
    return total;
}

DiscreteDistribution point(std::size_t n, std::size_t at) {
    std::vector<double> p(n, 0.0);
    p[at] = 1.0;
    return DiscreteDistribution::flat(p);
}

} // namespace

TEST(Kernel, Examples) {
    const std::vector<double> x{3.0};
    EXPECT_NEAR(kernel_value(x, x, kDefaultKernel), 5.0, 1e-15);
    EXPECT_NEAR(kernel_value(std::vector<double>{0}, std::vector<double>{1}, kUnitKernel), 0.6065306597126334, 1e-15);
    EXPECT_NEAR(kernel_value(std::vector<double>{0, 0}, std::vector<double>{1, 1}, kUnitKernel),
                0.36787944117144233, 1e-15);
    EXPECT_EQ(kDefaultKernel.bandwidths, (std::vector<double>{0.01, 0.1, 1, 10, 100}));
    EXPECT_THROW(KernelConfig{{}}.validate(), std::invalid_argument);
    EXPECT_THROW((KernelConfig{{1.0, -1.0}}.validate()), std::invalid_argument);
}

TEST(Mmd, IdenticalIsZero) {
    std::mt19937_64 rng(1);
    const auto p = DiscreteDistribution::flat(qcbm::testing::random_simplex(16, rng));
    EXPECT_NEAR(mmd_loss(p, p, kDefaultKernel), 0.0, 1e-12);
}

TEST(Mmd, PointMassesClosedForm) {
    EXPECT_NEAR(mmd_loss(point(2, 0), point(2, 1), kUnitKernel), 0.7869386805747332, 1e-12);
    // Frozen from the five-term expansion 10 - 2 sum_s exp(-1 / (2 s)).
    EXPECT_NEAR(mmd_loss(point(2, 0), point(2, 1), kDefaultKernel), 4.880978979189769, 1e-12);
    EXPECT_NEAR(brute_mmd(point(2, 0), point(2, 1), kDefaultKernel.bandwidths), 4.880978979189769, 1e-12);
}

TEST(Mmd, MatchesBruteForceOnJointLayouts) {
    std::mt19937_64 rng(2);
    for (const auto &bits : {std::vector<unsigned>{4}, std::vector<unsigned>{2, 2}, std::vector<unsigned>{1, 2, 2}}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = std::size_t{1} << (bits.size() == 1 ? 4 : (bits.size() == 2 ? 4 : 5));
            const DiscreteDistribution p(qcbm::testing::random_simplex(n, rng), bits);
            const DiscreteDistribution q(qcbm::testing::random_simplex(n, rng), bits);
            EXPECT_NEAR(mmd_loss(p, q, kDefaultKernel), brute_mmd(p, q, kDefaultKernel.bandwidths), 1e-12);
        }
    }
}

TEST(Mmd, LayoutMismatchThrows) {
    const DiscreteDistribution a(std::vector<double>(16, 1.0 / 16), {4});
    const DiscreteDistribution b(std::vector<double>(16, 1.0 / 16), {2, 2});
    EXPECT_THROW(mmd_loss(a, b, kDefaultKernel), std::invalid_argument);
    EXPECT_THROW(mmd_loss(a, DiscreteDistribution::flat({0.5, 0.5}), kDefaultKernel), std::invalid_argument);
}

TEST(Mmd, SampleFormAgreesWithBinnedForm) {
    // The V-statistic of samples equals the histogram MMD of their empirical distributions.
    std::mt19937_64 rng(5);
    std::vector<double> xs;
    std::vector<double> ys;
    for (int i = 0; i < 200; ++i) {
        xs.push_back(static_cast<double>(rng() % 8));
        ys.push_back(static_cast<double>(rng() % 5));
    }
    std::vector<double> px(8, 0.0);
    std::vector<double> py(8, 0.0);
    for (double x : xs) {
        px[static_cast<std::size_t>(x)] += 1.0 / 200;
    }
    for (double y : ys) {
        py[static_cast<std::size_t>(y)] += 1.0 / 200;
    }
    EXPECT_NEAR(mmd_samples(xs, ys, 1, kDefaultKernel),
                mmd_loss(DiscreteDistribution::flat(px), DiscreteDistribution::flat(py), kDefaultKernel), 1e-12);
}

TEST(MmdProperty, NonNegativeAndSymmetric) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::vector<unsigned> bits = trial % 2 ? std::vector<unsigned>{3} : std::vector<unsigned>{2, 1};
        const DiscreteDistribution p(qcbm::testing::random_simplex(8, rng), bits);
        const DiscreteDistribution q(qcbm::testing::random_simplex(8, rng), bits);
        const double a = mmd_loss(p, q, kDefaultKernel);
        EXPECT_GE(a, -1e-12);
        EXPECT_NEAR(a, mmd_loss(q, p, kDefaultKernel), 1e-12);
    }
}

TEST(MmdGradient, StationaryPoint) {
    CircuitSpec c;
    c.n_qubits = 1;
    c.n_parameters = 1;
    c.gates = {Gate::trainable(GateKind::RY, {0}, 0)};
    const BornModel m(c, {kPi});
    EXPECT_NEAR(mmd_gradient(m, point(2, 1), kDefaultKernel)[0], 0.0, 1e-10);
}

TEST(MmdGradient, MatchesFiniteDifferencesOnRandomModels) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        const std::size_t params = 1 + rng() % 12;
        const auto c = qcbm::testing::random_circuit(n, params, rng() % 4, rng);
        std::vector<double> theta(params);
        for (double &t : theta) {
            t = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
        }
        const BornModel m(c, theta);
        const auto target = DiscreteDistribution::flat(qcbm::testing::random_simplex(std::size_t{1} << n, rng));
        const auto grad = mmd_gradient(m, target, kDefaultKernel);
        auto loss = [&](const std::vector<double> &t) {
            return brute_mmd(DiscreteDistribution::flat(qcbm::testing::unitary_probabilities(c, t)), target,
                             kDefaultKernel.bandwidths);
        };
        const auto fd = qcbm::testing::finite_difference(loss, theta, 1e-3);
        for (std::size_t i = 0; i < params; ++i) {
            EXPECT_LE(qcbm::testing::relative_error(grad[i], fd[i], 1e-6), 1e-5) << trial << " " << i;
        }
    }
}

TEST(MmdGradient, SharedParameterSumsOverGates) {
    CircuitSpec c;
    c.n_qubits = 2;
    c.n_parameters = 1;
    c.gates = {Gate::trainable(GateKind::RY, {0}, 0), Gate::trainable(GateKind::RZZ, {0, 1}, 0),
               Gate::fixed(GateKind::H, {1}), Gate::trainable(GateKind::RX, {1}, 0)};
    const BornModel m(c, {0.9});
    const auto target = DiscreteDistribution::flat({0.1, 0.2, 0.3, 0.4});
    auto loss = [&](const std::vector<double> &t) {
        return brute_mmd(DiscreteDistribution::flat(qcbm::testing::unitary_probabilities(c, t)), target,
                         kDefaultKernel.bandwidths);
    };
    EXPECT_NEAR(mmd_gradient(m, target, kDefaultKernel)[0], qcbm::testing::finite_difference(loss, {0.9}, 1e-3)[0],
                1e-9);
}

TEST(TotalVariance, Examples) {
    EXPECT_EQ(total_variance(point(4, 1), point(4, 1)), 0.0);
    EXPECT_EQ(total_variance(point(4, 0), point(4, 3)), 1.0);
    EXPECT_NEAR(total_variance(DiscreteDistribution::flat({0.5, 0.5}), DiscreteDistribution::flat({0.75, 0.25})),
                0.25, 1e-15);
}

TEST(TotalVarianceProperty, MetricAxioms) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = DiscreteDistribution::flat(qcbm::testing::random_simplex(16, rng));
        const auto b = DiscreteDistribution::flat(qcbm::testing::random_simplex(16, rng));
        const auto c = DiscreteDistribution::flat(qcbm::testing::random_simplex(16, rng));
        const double ab = total_variance(a, b);
        EXPECT_EQ(ab, total_variance(b, a));
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
        EXPECT_LE(ab, total_variance(a, c) + total_variance(c, b) + 1e-15);
        EXPECT_EQ(total_variance(a, a), 0.0);
    }
}

TEST(Pearson, Examples) {
    const auto dup = pearson_correlation({{1, 1}, {2, 2}, {5, 5}, {3, 3}});
    EXPECT_NEAR(dup(0, 1), 1.0, 1e-12);
    const auto neg = pearson_correlation({{1, -1}, {2, -2}, {7, -7}});
    EXPECT_NEAR(neg(0, 1), -1.0, 1e-12);
    const auto zero = pearson_correlation({{0, 0}, {1, 1}, {2, 0}});
    EXPECT_NEAR(zero(0, 1), 0.0, 1e-15);
    EXPECT_EQ(zero(0, 0), 1.0);
    EXPECT_THROW(pearson_correlation({{1, 2}, {1, 3}}), std::domain_error);
    EXPECT_THROW(pearson_correlation({{1, 2}}), std::invalid_argument);
}

TEST(PearsonProperty, AffineInvariance) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows(500);
    for (auto &r : rows) {
        const double z = g(rng);
        r = {z, 0.5 * z + g(rng), -z + 0.2 * g(rng)};
    }
    const auto base = pearson_correlation(rows);
    auto scaled = rows;
    for (auto &r : scaled) {
        r = {3.0 * r[0] + 10.0, 0.01 * r[1] - 4.0, 250.0 * r[2] + 1e3};
    }
    const auto other = pearson_correlation(scaled);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(base(i, j), other(i, j), 1e-10);
        }
    }
}
