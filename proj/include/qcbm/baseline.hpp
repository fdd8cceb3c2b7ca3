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
 * Classical baseline: a fully connected generator trained on continuous
 * features with the sample MMD (GMMD). Sigmoid hidden layers, affine output.
 */

#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcbm/core.hpp"
#include "qcbm/data.hpp"
#include "qcbm/metrics.hpp"
#include "qcbm/optimize.hpp"

namespace qcbm {

struct MlpSpec {
    std::size_t latent_dim{15};
    std::vector<std::size_t> hidden{64, 128, 64, 16};
    std::size_t output_dim{1};

    void validate() const {
        if (latent_dim == 0 || output_dim == 0) {
            throw std::invalid_argument("MLP latent and output sizes must be at least 1");
        }
        for (std::size_t h : hidden) {
            if (h == 0) {
                throw std::invalid_argument("MLP hidden sizes must be at least 1");
            }
        }
    }

    /// latent, hidden..., output
    [[nodiscard]] std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w{latent_dim};
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(output_dim);
        return w;
    }

    [[nodiscard]] std::size_t n_layers() const { return hidden.size() + 1; }

    [[nodiscard]] std::size_t n_parameters() const {
        const auto w = widths();
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < w.size(); ++l) {
            n += w[l + 1] * (w[l] + 1);
        }
        return n;
    }

    bool operator==(const MlpSpec &) const = default;
};

/**
 * Flat parameter vector. Layer l stores its (out x in) weight matrix in
 * column-major order followed by its bias.
 */
struct MlpWeights {
    MlpSpec spec;
    std::vector<double> params;

    MlpWeights() = default;
    explicit MlpWeights(MlpSpec s) : spec(std::move(s)) {
        spec.validate();
        params.assign(spec.n_parameters(), 0.0);
    }

    [[nodiscard]] std::size_t offset(std::size_t layer) const {
        const auto w = spec.widths();
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) {
            off += w[l + 1] * (w[l] + 1);
        }
        return off;
    }

    [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const {
        const auto w = spec.widths();
        return {params.data() + offset(layer), static_cast<Eigen::Index>(w[layer + 1]),
                static_cast<Eigen::Index>(w[layer])};
    }
    Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer) {
        const auto w = spec.widths();
        return {params.data() + offset(layer), static_cast<Eigen::Index>(w[layer + 1]),
                static_cast<Eigen::Index>(w[layer])};
    }
    [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const {
        const auto w = spec.widths();
        return {params.data() + offset(layer) + w[layer + 1] * w[layer],
                static_cast<Eigen::Index>(w[layer + 1])};
    }
    Eigen::Map<Eigen::VectorXd> bias(std::size_t layer) {
        const auto w = spec.widths();
        return {params.data() + offset(layer) + w[layer + 1] * w[layer],
                static_cast<Eigen::Index>(w[layer + 1])};
    }
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline MlpWeights init_weights(const MlpSpec &spec, std::uint64_t seed) {
    MlpWeights w(spec);
    Rng rng(seed);
    const auto widths = spec.widths();
    for (std::size_t l = 0; l < spec.n_layers(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
        std::uniform_real_distribution<double> u(-limit, limit);
        auto m = w.weight(l);
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                m(r, c) = u(rng);
            }
        }
    }
    return w;
}

namespace detail {

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd &z) {
    return (1.0 + (-z.array()).exp()).inverse().matrix();
}

/// Activations per layer; front is the input, back is the output.
inline std::vector<Eigen::MatrixXd> forward_all(const MlpWeights &w, const Eigen::MatrixXd &latent) {
    if (static_cast<std::size_t>(latent.rows()) != w.spec.latent_dim) {
        throw std::invalid_argument("latent batch has " + std::to_string(latent.rows()) +
                                    " rows, expected " + std::to_string(w.spec.latent_dim));
    }
    if (w.params.size() != w.spec.n_parameters()) {
        throw std::invalid_argument("weight vector does not match the MLP shape");
    }
    std::vector<Eigen::MatrixXd> acts{latent};
    for (std::size_t l = 0; l < w.spec.n_layers(); ++l) {
        Eigen::MatrixXd z = w.weight(l) * acts.back();
        z.colwise() += w.bias(l);
        acts.push_back(l + 1 < w.spec.n_layers() ? sigmoid(z) : std::move(z));
    }
    return acts;
}

} // namespace detail

/// Generates one output column per latent column.
inline Eigen::MatrixXd forward(const MlpWeights &w, const Eigen::MatrixXd &latent) {
    return detail::forward_all(w, latent).back();
}

/// Standard-normal latent batch, one column per sample.
inline Eigen::MatrixXd sample_latent(std::size_t latent_dim, std::size_t n, Rng &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(latent_dim, n);
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            z(r, c) = normal(rng);
        }
    }
    return z;
}

namespace detail {

/// Pairwise squared distances between columns of `a` and columns of `b`.
inline Eigen::ArrayXXd pairwise_sq_distance(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
    Eigen::ArrayXXd d2 = Eigen::ArrayXXd::Zero(a.cols(), b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        d2 += (a.row(r).transpose().replicate(1, b.cols()) - b.row(r).replicate(a.cols(), 1))
                  .array()
                  .square();
    }
    return d2;
}

/// Kernel sum and sum_s k_s / s over the bandwidths, elementwise.
inline std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd> kernel_blocks(const Eigen::ArrayXXd &d2,
                                                                 const KernelConfig &config) {
    Eigen::ArrayXXd k = Eigen::ArrayXXd::Zero(d2.rows(), d2.cols());
    Eigen::ArrayXXd dk = Eigen::ArrayXXd::Zero(d2.rows(), d2.cols());
    for (double s : config.bandwidths) {
        const Eigen::ArrayXXd ks = (-d2 / (2.0 * s)).exp();
        k += ks;
        dk += ks / s;
    }
    return {std::move(k), std::move(dk)};
}

/// Rows i of the result: sum_j d/da_i k(a_i, b_j) = -sum_j g_ij (a_i - b_j).
inline Eigen::MatrixXd kernel_pull(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b,
                                   const Eigen::ArrayXXd &g) {
    const Eigen::VectorXd row_sums = g.rowwise().sum().matrix();
    return b * g.matrix().transpose() - a * row_sums.asDiagonal();
}

} // namespace detail

/**
 * V-statistic MMD between generated columns `x` and data columns `y`, with
 * the gradient with respect to every entry of `x`.
 */
inline std::pair<double, Eigen::MatrixXd> mmd_with_sample_gradient(const Eigen::MatrixXd &x,
                                                                   const Eigen::MatrixXd &y,
                                                                   const KernelConfig &config) {
    if (x.rows() != y.rows() || x.cols() == 0 || y.cols() == 0) {
        throw std::invalid_argument("sample sets must be non-empty with equal dimension");
    }
    const double n = static_cast<double>(x.cols());
    const double m = static_cast<double>(y.cols());
    const auto [kxx, gxx] = detail::kernel_blocks(detail::pairwise_sq_distance(x, x), config);
    const auto [kxy, gxy] = detail::kernel_blocks(detail::pairwise_sq_distance(x, y), config);
    const auto [kyy, gyy] = detail::kernel_blocks(detail::pairwise_sq_distance(y, y), config);
    const double loss = kxx.sum() / (n * n) - 2.0 * kxy.sum() / (n * m) + kyy.sum() / (m * m);
    Eigen::MatrixXd grad = 2.0 / (n * n) * detail::kernel_pull(x, x, gxx) -
                           2.0 / (n * m) * detail::kernel_pull(x, y, gxy);
    return {loss, std::move(grad)};
}

/// Sample MMD of the generator output on `latent` against `data`, and its parameter gradient.
inline std::pair<double, std::vector<double>> gmmd_loss_gradient(const MlpWeights &w,
                                                                const Eigen::MatrixXd &latent,
                                                                const Eigen::MatrixXd &data,
                                                                const KernelConfig &config) {
    const auto acts = detail::forward_all(w, latent);
    auto [loss, delta] = mmd_with_sample_gradient(acts.back(), data, config);
    std::vector<double> grad(w.params.size(), 0.0);
    MlpWeights g(w.spec);
    for (std::size_t l = w.spec.n_layers(); l-- > 0;) {
        g.weight(l) = delta * acts[l].transpose();
        g.bias(l) = delta.rowwise().sum();
        if (l > 0) {
            const Eigen::MatrixXd &a = acts[l];
            delta = ((w.weight(l).transpose() * delta).array() * a.array() * (1.0 - a.array())).matrix();
        }
    }
    return {loss, std::move(g.params)};
}

struct GmmdConfig {
    std::size_t epochs{200};
    std::size_t batches_per_epoch{10};
    std::size_t batch_size{512};
    double learning_rate{1e-3};
    KernelConfig kernel;
    std::uint64_t seed{1};

    void validate() const {
        if (epochs == 0 || batches_per_epoch == 0 || batch_size == 0) {
            throw ConfigError("gmmd epochs, batches and batch size must be positive");
        }
        if (!(learning_rate > 0.0)) {
            throw ConfigError("gmmd learning rate must be positive");
        }
        kernel.validate();
    }
};

struct GmmdResult {
    MlpWeights weights;
    TrainTrace trace;
};

/// Rows of `m` as columns of a dense matrix.
inline Eigen::MatrixXd to_columns(const FeatureMatrix &m) {
    Eigen::MatrixXd out(m.cols, m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            out(c, r) = m(r, c);
        }
    }
    return out;
}

inline FeatureMatrix from_columns(const Eigen::MatrixXd &m) {
    FeatureMatrix out(m.cols(), m.rows());
    for (Eigen::Index r = 0; r < m.cols(); ++r) {
        for (Eigen::Index c = 0; c < m.rows(); ++c) {
            out(r, c) = m(c, r);
        }
    }
    return out;
}

/**
 * ADAM on minibatch sample MMD: each step draws a latent batch and a data
 * batch (with replacement). The epoch record carries the mean batch loss;
 * `validation`, if given, is scored on one fresh generated batch per epoch.
 */
inline GmmdResult train_gmmd(const MlpSpec &spec, const FeatureMatrix &dataset,
                             const GmmdConfig &config, const FeatureMatrix *validation = nullptr) {
    config.validate();
    spec.validate();
    if (dataset.rows() == 0) {
        throw std::invalid_argument("gmmd training set is empty");
    }
    if (dataset.cols != spec.output_dim) {
        throw std::invalid_argument("dataset width does not match the MLP output size");
    }
    const Eigen::MatrixXd data = to_columns(dataset);
    const std::size_t val_n = validation ? std::min(validation->rows(), config.batch_size) : 0;
    const Eigen::MatrixXd val =
        validation ? to_columns(*validation).leftCols(static_cast<Eigen::Index>(val_n)) : Eigen::MatrixXd();

    GmmdResult result{init_weights(spec, config.seed), {}};
    Rng rng = derive_rng(config.seed, 1);
    std::uniform_int_distribution<std::size_t> pick(0, dataset.rows() - 1);
    AdamState adam;

    auto score_val = [&]() {
        if (!validation) {
            return 0.0;
        }
        Rng vr = derive_rng(config.seed, 2);
        const Eigen::MatrixXd gen = forward(result.weights, sample_latent(spec.latent_dim, val_n, vr));
        return mmd_with_sample_gradient(gen, val, config.kernel).first;
    };
    result.trace.initial_val_loss = score_val();
    double best = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        double loss_sum = 0.0;
        double grad_sum = 0.0;
        for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
            Eigen::MatrixXd batch(data.rows(), static_cast<Eigen::Index>(config.batch_size));
            for (Eigen::Index c = 0; c < batch.cols(); ++c) {
                batch.col(c) = data.col(static_cast<Eigen::Index>(pick(rng)));
            }
            const Eigen::MatrixXd latent = sample_latent(spec.latent_dim, config.batch_size, rng);
            auto [loss, grad] = gmmd_loss_gradient(result.weights, latent, batch, config.kernel);
            if (!std::isfinite(loss)) {
                throw TrainingAborted("gmmd loss became non-finite at epoch " + std::to_string(epoch));
            }
            loss_sum += loss;
            grad_sum += detail::l2_norm(grad);
            auto [next, state] = adam_step(result.weights.params, grad, std::move(adam), config.learning_rate);
            result.weights.params = std::move(next);
            adam = std::move(state);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = "adam";
        rec.train_loss = loss_sum / static_cast<double>(config.batches_per_epoch);
        rec.val_loss = score_val();
        rec.lr = config.learning_rate;
        rec.grad_norm = grad_sum / static_cast<double>(config.batches_per_epoch);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (rec.val_loss < best) {
            best = rec.val_loss;
            result.trace.best_epoch = epoch;
        }
        result.trace.epochs.push_back(rec);
    }
    return result;
}

/// n generated feature rows.
inline FeatureMatrix sample_gmmd(const MlpWeights &w, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return from_columns(forward(w, sample_latent(w.spec.latent_dim, n, rng)));
}

} // namespace qcbm
