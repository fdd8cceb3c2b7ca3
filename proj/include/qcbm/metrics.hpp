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
 * MMD loss with a summed multi-bandwidth Gaussian kernel, its shift-rule
 * gradient, total variance and Pearson correlation.
 *
 * Kernel coordinates are bin-index tuples; multivariate distances are
 * squared Euclidean over the tuple.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcbm/born.hpp"
#include "qcbm/distribution.hpp"

namespace qcbm {

struct KernelConfig {
    std::vector<double> bandwidths{0.01, 0.1, 1.0, 10.0, 100.0};

    void validate() const {
        if (bandwidths.empty()) {
            throw std::invalid_argument("kernel needs at least one bandwidth");
        }
        for (double s : bandwidths) {
            if (!(s > 0.0)) {
                throw std::invalid_argument("kernel bandwidths must be positive");
            }
        }
    }

    bool operator==(const KernelConfig &) const = default;
};

/// sum_sigma exp(-d2 / (2 sigma)) for a squared distance d2.
inline double kernel_from_sq_distance(double d2, const KernelConfig &config) {
    double k = 0.0;
    for (double s : config.bandwidths) {
        k += std::exp(-d2 / (2.0 * s));
    }
    return k;
}

inline double kernel_value(std::span<const double> x, std::span<const double> y,
                           const KernelConfig &config) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("kernel coordinates differ in dimension");
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        d2 += (x[i] - y[i]) * (x[i] - y[i]);
    }
    return kernel_from_sq_distance(d2, config);
}

/// Dense kernel matrix over every bin of a register layout.
class GramCache {
  public:
    GramCache(std::vector<unsigned> register_bits, const KernelConfig &config)
        : register_bits_(std::move(register_bits)), n_bandwidths_(config.bandwidths.size()) {
        config.validate();
        const DiscreteDistribution layout(
            std::vector<double>(std::size_t{1} << total_bits(), 0.0), register_bits_);
        n_ = layout.size();
        std::vector<std::vector<std::size_t>> coords(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            coords[i] = layout.bin_tuple(i);
        }
        // Squared distances are small integers, so cache the kernel per distance.
        std::size_t max_d2 = 0;
        for (unsigned b : register_bits_) {
            const std::size_t m = (std::size_t{1} << b) - 1;
            max_d2 += m * m;
        }
        std::vector<double> by_d2(max_d2 + 1);
        for (std::size_t d = 0; d <= max_d2; ++d) {
            by_d2[d] = kernel_from_sq_distance(static_cast<double>(d), config);
        }
        matrix_.resize(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                std::size_t d2 = 0;
                for (std::size_t f = 0; f < coords[i].size(); ++f) {
                    const auto diff = static_cast<std::ptrdiff_t>(coords[i][f]) -
                                      static_cast<std::ptrdiff_t>(coords[j][f]);
                    d2 += static_cast<std::size_t>(diff * diff);
                }
                matrix_[i * n_ + j] = by_d2[d2];
            }
        }
    }

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] std::size_t n_bandwidths() const { return n_bandwidths_; }
    [[nodiscard]] const std::vector<unsigned> &register_bits() const { return register_bits_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return matrix_[i * n_ + j]; }

    /// K v
    [[nodiscard]] std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> out(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const double *row = &matrix_[i * n_];
            double acc = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                acc += row[j] * v[j];
            }
            out[i] = acc;
        }
        return out;
    }

    /// a^T K b
    [[nodiscard]] double bilinear(std::span<const double> a, std::span<const double> b) const {
        const auto kb = apply(b);
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            acc += a[i] * kb[i];
        }
        return acc;
    }

  private:
    [[nodiscard]] unsigned total_bits() const {
        unsigned t = 0;
        for (unsigned b : register_bits_) {
            t += b;
        }
        return t;
    }

    std::vector<unsigned> register_bits_;
    std::size_t n_bandwidths_;
    std::size_t n_{0};
    std::vector<double> matrix_;
};

inline void require_layout(const GramCache &gram, const DiscreteDistribution &d) {
    if (d.register_bits != gram.register_bits()) {
        throw std::invalid_argument("distribution layout does not match the kernel cache");
    }
}

/// (p - pi)^T K (p - pi), the exact-distribution MMD.
inline double mmd_loss(const DiscreteDistribution &p, const DiscreteDistribution &target,
                       const GramCache &gram) {
    require_same_bins(p, target);
    require_layout(gram, p);
    std::vector<double> diff(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        diff[i] = p.probs[i] - target.probs[i];
    }
    return gram.bilinear(diff, diff);
}

inline double mmd_loss(const DiscreteDistribution &p, const DiscreteDistribution &target,
                       const KernelConfig &config) {
    require_same_bins(p, target);
    return mmd_loss(p, target, GramCache(p.register_bits, config));
}

/**
 * Biased (V-statistic) MMD between two sample sets of equal dimension,
 * each sample a row of `dim` coordinates.
 */
inline double mmd_samples(std::span<const double> xs, std::span<const double> ys, std::size_t dim,
                          const KernelConfig &config) {
    if (dim == 0 || xs.size() % dim != 0 || ys.size() % dim != 0 || xs.empty() || ys.empty()) {
        throw std::invalid_argument("sample sets must be non-empty rows of the given dimension");
    }
    const std::size_t nx = xs.size() / dim;
    const std::size_t ny = ys.size() / dim;
    auto mean_k = [&](std::span<const double> a, std::size_t na, std::span<const double> b,
                      std::size_t nb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < na; ++i) {
            for (std::size_t j = 0; j < nb; ++j) {
                acc += kernel_value(a.subspan(i * dim, dim), b.subspan(j * dim, dim), config);
            }
        }
        return acc / static_cast<double>(na * nb);
    };
    return mean_k(xs, nx, xs, nx) - 2.0 * mean_k(xs, nx, ys, ny) + mean_k(ys, ny, ys, ny);
}

/**
 * Shift-rule gradient of the exact MMD:
 *   dL/dtheta_i = sum over gates g reading i of 2 r_g (p_g+ - p_g-)^T K (p - pi),
 * which for RY/RX (r = 1/2) is the four-expectation form
 *   E[K(p+, p)] - E[K(p-, p)] - E[K(p+, pi)] + E[K(p-, pi)].
 */
inline std::vector<double> mmd_gradient(const BornModel &model, const DiscreteDistribution &target,
                                        const GramCache &gram,
                                        std::optional<double> condition = std::nullopt) {
    const auto data = model.data_angles(condition);
    const auto p = detail::distribution_for(model, model.theta, data, condition);
    require_same_bins(p, target);
    require_layout(gram, p);
    std::vector<double> diff(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        diff[i] = p.probs[i] - target.probs[i];
    }
    const auto k_diff = gram.apply(diff);
    std::vector<double> grad(model.n_parameters(), 0.0);
    for (std::size_t gi = 0; gi < model.circuit.gates.size(); ++gi) {
        const auto slot = model.circuit.gates[gi].parameter_slot();
        if (!slot) {
            continue;
        }
        const auto [plus, minus] = gate_shifted_distributions(model, gi, data, condition);
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            acc += (plus.probs[i] - minus.probs[i]) * k_diff[i];
        }
        grad[*slot] += 2.0 * shift_rule(model.circuit.gates[gi].kind).coefficient * acc;
    }
    return grad;
}

inline std::vector<double> mmd_gradient(const BornModel &model, const DiscreteDistribution &target,
                                        const KernelConfig &config,
                                        std::optional<double> condition = std::nullopt) {
    return mmd_gradient(model, target, GramCache(target.register_bits, config), condition);
}

/// Half the L1 distance; in [0, 1] for normalized inputs.
inline double total_variance(const DiscreteDistribution &p, const DiscreteDistribution &target) {
    require_same_bins(p, target);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += std::abs(p.probs[i] - target.probs[i]);
    }
    return 0.5 * acc;
}

/// Row-major symmetric matrix.
struct SquareMatrix {
    std::size_t n{0};
    std::vector<double> values;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t size) : n(size), values(size * size, 0.0) {}

    double &operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Pearson matrix R_ij = C_ij / sqrt(C_ii C_jj) of row samples.
inline SquareMatrix pearson_correlation(const std::vector<std::vector<double>> &samples) {
    if (samples.size() < 2) {
        throw std::invalid_argument("correlation needs at least two samples");
    }
    const std::size_t d = samples.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto &s : samples) {
        if (s.size() != d) {
            throw std::invalid_argument("samples differ in dimension");
        }
        for (std::size_t i = 0; i < d; ++i) {
            mean[i] += s[i];
        }
    }
    for (double &m : mean) {
        m /= static_cast<double>(samples.size());
    }
    SquareMatrix cov(d);
    std::vector<double> scale(d, 0.0);
    for (const auto &s : samples) {
        for (std::size_t i = 0; i < d; ++i) {
            scale[i] += s[i] * s[i];
            for (std::size_t j = 0; j < d; ++j) {
                cov(i, j) += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        // Rounding leaves a residue of order eps * sum x^2 for constant columns.
        if (!(cov(i, i) > 1e-12 * scale[i])) {
            throw std::domain_error("feature " + std::to_string(i) +
                                    " has zero variance; correlation undefined");
        }
    }
    SquareMatrix r(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            r(i, j) = i == j ? 1.0 : std::clamp(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)), -1.0, 1.0);
        }
    }
    return r;
}

} // namespace qcbm
