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
 * ADAM and SPSA updates, the halving learning-rate schedule, parameter
 * initialization and the epoch/batch training loop, including the mixed
 * scheme (ADAM pretraining, then SPSA fine-tuning under device noise).
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qcbm/born.hpp"
#include "qcbm/core.hpp"
#include "qcbm/distribution.hpp"
#include "qcbm/metrics.hpp"
#include "qcbm/noise.hpp"

namespace qcbm {

struct AdamSettings {
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t t{0};
};

/// One bias-corrected ADAM update. Returns the new parameters and moments.
inline std::pair<std::vector<double>, AdamState> adam_step(std::span<const double> theta,
                                                           std::span<const double> gradient,
                                                           AdamState state, double lr,
                                                           const AdamSettings &s = {}) {
    if (theta.size() != gradient.size()) {
        throw std::invalid_argument("parameter and gradient lengths differ");
    }
    if (state.m.empty()) {
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
    }
    if (state.m.size() != theta.size() || state.v.size() != theta.size()) {
        throw std::invalid_argument("ADAM state does not match parameter length");
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.t));
    std::vector<double> next(theta.begin(), theta.end());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = s.beta1 * state.m[i] + (1.0 - s.beta1) * gradient[i];
        state.v[i] = s.beta2 * state.v[i] + (1.0 - s.beta2) * gradient[i] * gradient[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        next[i] -= lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
    return {std::move(next), std::move(state)};
}

/// Gain sequences a_k = a / (k+1)^alpha and c_k = c / (k+1)^gamma.
struct SpsaSettings {
    double a{0.2};
    double c{0.1};
    double alpha{0.602};
    double gamma{0.101};
};

using LossFunction = std::function<double(std::span<const double>)>;

/**
 * One SPSA update from exactly two loss evaluations at theta +- c_k Delta,
 * Delta a Rademacher vector.
 */
inline std::vector<double> spsa_step(std::span<const double> theta, const LossFunction &loss,
                                     std::size_t iteration, const SpsaSettings &s, Rng &rng) {
    const auto k1 = static_cast<double>(iteration + 1);
    const double ak = s.a / std::pow(k1, s.alpha);
    const double ck = s.c / std::pow(k1, s.gamma);
    std::vector<double> delta(theta.size());
    for (double &d : delta) {
        d = (rng() & 1U) ? 1.0 : -1.0;
    }
    std::vector<double> plus(theta.begin(), theta.end());
    std::vector<double> minus(theta.begin(), theta.end());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        plus[i] += ck * delta[i];
        minus[i] -= ck * delta[i];
    }
    const double diff = (loss(plus) - loss(minus)) / (2.0 * ck);
    std::vector<double> next(theta.begin(), theta.end());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        next[i] -= ak * diff / delta[i];
    }
    return next;
}

enum class InitScheme { zeros, uniform_0_2pi, small_normal };

inline std::vector<double> init_parameters(std::size_t n, InitScheme scheme, std::uint64_t seed) {
    std::vector<double> theta(n, 0.0);
    Rng rng(seed);
    if (scheme == InitScheme::uniform_0_2pi) {
        for (double &t : theta) {
            t = 2.0 * kPi * uniform01(rng);
        }
    } else if (scheme == InitScheme::small_normal) {
        std::normal_distribution<double> normal(0.0, 0.1);
        for (double &t : theta) {
            t = normal(rng);
        }
    }
    return theta;
}

/// initial_lr * 2^-floor(epoch / period), exact in floating point.
inline double learning_rate_at(std::size_t epoch, double initial_lr, std::size_t period) {
    return std::ldexp(initial_lr, -static_cast<int>(epoch / period));
}

enum class OptimizerKind { adam, spsa, mixed };

struct TrainConfig {
    OptimizerKind optimizer{OptimizerKind::adam};
    double initial_lr{0.01};
    std::size_t lr_halving_period{20};
    std::size_t batches_per_epoch{10};
    std::size_t batch_size{512};
    std::size_t max_epochs{70};
    /// SPSA epochs of the mixed scheme's fine-tuning phase.
    std::size_t spsa_epochs{10};
    std::uint64_t seed{0};
    SpsaSettings spsa;
    KernelConfig kernel;
    /// When set, SPSA (and ADAM for optimizer=adam) evaluate through this noise model.
    std::optional<NoiseConfig> noise;
    bool mitigate_readout{true};
    /// Estimate every distribution from batch_size shots instead of exactly.
    bool shot_mode{false};

    void validate() const {
        if (!(initial_lr > 0.0) || lr_halving_period == 0 || batches_per_epoch == 0 ||
            batch_size == 0) {
            throw std::invalid_argument("training rates and counts must be positive");
        }
        kernel.validate();
        if (noise) {
            noise->validate();
        }
    }
};

struct EpochRecord {
    std::size_t epoch{0};
    std::string phase;
    double train_loss{0.0};
    double val_loss{0.0};
    double tv{0.0};
    double lr{0.0};
    double seconds{0.0};
    double grad_norm{0.0};
};

struct TrainTrace {
    double initial_val_loss{0.0};
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch{0};

    /// epoch,phase,train_loss,val_loss,tv,lr,grad_norm,seconds
    [[nodiscard]] std::string to_csv(bool include_time = true) const {
        std::ostringstream out;
        out.precision(10);
        out << "epoch,phase,train_loss,val_loss,tv,lr,grad_norm" << (include_time ? ",seconds" : "")
            << '\n';
        for (const auto &e : epochs) {
            out << e.epoch << ',' << e.phase << ',' << e.train_loss << ',' << e.val_loss << ','
                << e.tv << ',' << e.lr << ',' << e.grad_norm;
            if (include_time) {
                out << ',' << e.seconds;
            }
            out << '\n';
        }
        return out.str();
    }
};

/// Train and validation histograms for one condition value (or the only one).
struct TrainingTarget {
    std::optional<double> condition;
    DiscreteDistribution train;
    DiscreteDistribution validation;
};

struct TrainResult {
    BornModel model;
    TrainTrace trace;
    /// Best ADAM-phase parameters and the parameters SPSA started from (mixed only).
    std::vector<double> adam_best_theta;
    std::vector<double> spsa_start_theta;
};

/// How a distribution is produced during training: exact, noisy, sampled, mitigated.
struct EvalPipeline {
    std::optional<NoiseConfig> noise;
    std::optional<ConfusionMatrix> mitigation;
    std::size_t shots{0};

    [[nodiscard]] bool exact() const { return !noise && shots == 0; }

    [[nodiscard]] DiscreteDistribution evaluate(const BornModel &model, std::span<const double> theta,
                                                std::optional<double> condition,
                                                std::optional<GateShift> shift,
                                                std::uint64_t seed) const {
        const auto data = model.data_angles(condition);
        DiscreteDistribution p;
        if (noise) {
            NoiseConfig nc = *noise;
            nc.seed = seed;
            p = apply_cnot_depolarizing(model.circuit, theta, data, nc, shift);
            p.condition = condition;
            p = apply_readout_noise(p, nc);
        } else {
            p = detail::distribution_for(model, theta, data, condition, shift);
        }
        if (shots > 0) {
            p = sampled_distribution(p, shots, seed ^ 0x9E3779B97F4A7C15ULL);
        }
        if (mitigation) {
            p = mitigate_readout(p, *mitigation).distribution;
        }
        return p;
    }

    /// Shift-rule MMD gradient through this pipeline.
    [[nodiscard]] std::vector<double> gradient(const BornModel &model,
                                               const DiscreteDistribution &target,
                                               const GramCache &gram,
                                               std::optional<double> condition,
                                               std::uint64_t seed) const {
        if (exact()) {
            return mmd_gradient(model, target, gram, condition);
        }
        const auto p = evaluate(model, model.theta, condition, std::nullopt, seed);
        std::vector<double> diff(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            diff[i] = p.probs[i] - target.probs[i];
        }
        const auto k_diff = gram.apply(diff);
        std::vector<double> grad(model.n_parameters(), 0.0);
        for (std::size_t gi = 0; gi < model.circuit.gates.size(); ++gi) {
            const Gate &g = model.circuit.gates[gi];
            if (!g.parameter_slot()) {
                continue;
            }
            const auto rule = shift_rule(g.kind);
            const auto plus = evaluate(model, model.theta, condition, GateShift{gi, rule.shift},
                                       seed + 2 * gi + 1);
            const auto minus = evaluate(model, model.theta, condition, GateShift{gi, -rule.shift},
                                        seed + 2 * gi + 2);
            double acc = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                acc += (plus.probs[i] - minus.probs[i]) * k_diff[i];
            }
            grad[g.slot] += 2.0 * rule.coefficient * acc;
        }
        return grad;
    }
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 29;
    return x;
}

inline double l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

struct EpochMetrics {
    double train_loss{0.0};
    double val_loss{0.0};
    double tv{0.0};
};

inline EpochMetrics evaluate_epoch(const BornModel &model, const std::vector<TrainingTarget> &targets,
                                   const GramCache &gram, const EvalPipeline &pipeline,
                                   std::uint64_t seed) {
    EpochMetrics m;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto p = pipeline.evaluate(model, model.theta, targets[t].condition, std::nullopt,
                                         mix_seed(seed, t));
        m.train_loss += mmd_loss(p, targets[t].train, gram);
        m.val_loss += mmd_loss(p, targets[t].validation, gram);
        m.tv += total_variance(p, targets[t].validation);
    }
    const auto n = static_cast<double>(targets.size());
    m.train_loss /= n;
    m.val_loss /= n;
    m.tv /= n;
    if (!std::isfinite(m.train_loss) || !std::isfinite(m.val_loss)) {
        throw TrainingAborted("non-finite loss during evaluation");
    }
    return m;
}

inline std::optional<ConfusionMatrix> mitigation_for(const TrainConfig &config,
                                                     std::size_t n_qubits) {
    if (config.noise && config.mitigate_readout) {
        return readout_confusion_matrix(n_qubits, *config.noise);
    }
    return std::nullopt;
}

} // namespace detail

/**
 * Trains `model` on `targets` (one per condition value; a single
 * unconditioned target for plain models). Each epoch runs
 * batches_per_epoch updates per target, targets in ascending condition
 * order. Returns the parameters with the lowest validation loss.
 */
inline TrainResult train(BornModel model, std::vector<TrainingTarget> targets,
                         const TrainConfig &config) {
    config.validate();
    if (targets.empty()) {
        throw std::invalid_argument("training needs at least one target");
    }
    std::sort(targets.begin(), targets.end(), [](const TrainingTarget &a, const TrainingTarget &b) {
        return a.condition.value_or(0.0) < b.condition.value_or(0.0);
    });
    const GramCache gram(model.circuit.register_bits(), config.kernel);
    for (const auto &t : targets) {
        require_layout(gram, t.train);
        require_layout(gram, t.validation);
    }
    const std::size_t shots = config.shot_mode ? config.batch_size : 0;
    const EvalPipeline exact_pipeline{std::nullopt, std::nullopt, shots};
    const EvalPipeline noisy_pipeline{config.noise, detail::mitigation_for(config, model.circuit.n_qubits),
                                      shots};

    TrainResult result{model, {}, {}, {}};
    TrainTrace &trace = result.trace;
    const bool adam_uses_noise = config.optimizer == OptimizerKind::adam && config.noise;
    const EvalPipeline &adam_pipeline = adam_uses_noise ? noisy_pipeline : exact_pipeline;

    trace.initial_val_loss =
        detail::evaluate_epoch(model, targets, gram,
                               config.optimizer == OptimizerKind::spsa ? noisy_pipeline : adam_pipeline,
                               detail::mix_seed(config.seed, 0xFFFF))
            .val_loss;

    std::size_t step = 0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_theta = model.theta;
    std::size_t global_epoch = 0;

    auto record = [&](const char *phase, double lr, double grad_norm_sum, std::size_t n_grads,
                      const EvalPipeline &pipeline,
                      std::chrono::steady_clock::time_point start) {
        const auto m = detail::evaluate_epoch(model, targets, gram, pipeline,
                                              detail::mix_seed(config.seed, 0x10000 + global_epoch));
        EpochRecord rec;
        rec.epoch = global_epoch;
        rec.phase = phase;
        rec.train_loss = m.train_loss;
        rec.val_loss = m.val_loss;
        rec.tv = m.tv;
        rec.lr = lr;
        rec.grad_norm = n_grads ? grad_norm_sum / static_cast<double>(n_grads) : 0.0;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        trace.epochs.push_back(rec);
        if (m.val_loss < best) {
            best = m.val_loss;
            best_theta = model.theta;
            trace.best_epoch = global_epoch;
        }
        ++global_epoch;
    };

    if (config.optimizer != OptimizerKind::spsa) {
        AdamState adam;
        for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
            const auto start = std::chrono::steady_clock::now();
            const double lr = learning_rate_at(epoch, config.initial_lr, config.lr_halving_period);
            double grad_norm_sum = 0.0;
            std::size_t n_grads = 0;
            for (const auto &target : targets) {
                for (std::size_t b = 0; b < config.batches_per_epoch; ++b, ++step) {
                    const std::uint64_t seed = detail::mix_seed(config.seed, step);
                    const DiscreteDistribution batch_target =
                        shots ? sampled_distribution(target.train, config.batch_size, seed) : target.train;
                    const auto grad = adam_pipeline.gradient(model, batch_target, gram,
                                                             target.condition, seed + 1);
                    const double gn = detail::l2_norm(grad);
                    if (!std::isfinite(gn)) {
                        throw TrainingAborted("non-finite gradient at epoch " +
                                              std::to_string(epoch) + ", batch " + std::to_string(b));
                    }
                    grad_norm_sum += gn;
                    ++n_grads;
                    auto [next, state] = adam_step(model.theta, grad, std::move(adam), lr);
                    model.theta = std::move(next);
                    adam = std::move(state);
                }
            }
            record("adam", lr, grad_norm_sum, n_grads, adam_pipeline, start);
        }
        result.adam_best_theta = best_theta;
        model.theta = best_theta;
    }

    if (config.optimizer != OptimizerKind::adam) {
        const std::size_t spsa_epochs =
            config.optimizer == OptimizerKind::mixed ? config.spsa_epochs : config.max_epochs;
        result.spsa_start_theta = model.theta;
        // Fine-tuning is judged under the noisy pipeline, starting from where ADAM left off.
        best = detail::evaluate_epoch(model, targets, gram, noisy_pipeline,
                                      detail::mix_seed(config.seed, 0x20000))
                   .val_loss;
        best_theta = model.theta;
        Rng rng = derive_rng(config.seed, 0x5B5A);
        std::size_t iteration = 0;
        for (std::size_t epoch = 0; epoch < spsa_epochs; ++epoch) {
            const auto start = std::chrono::steady_clock::now();
            for (const auto &target : targets) {
                for (std::size_t b = 0; b < config.batches_per_epoch; ++b, ++step) {
                    const std::uint64_t seed = detail::mix_seed(config.seed, step);
                    const DiscreteDistribution batch_target =
                        shots ? sampled_distribution(target.train, config.batch_size, seed) : target.train;
                    std::uint64_t eval_seed = seed + 1;
                    LossFunction loss = [&](std::span<const double> th) {
                        const auto p = noisy_pipeline.evaluate(model, th, target.condition,
                                                               std::nullopt, eval_seed++);
                        return mmd_loss(p, batch_target, gram);
                    };
                    model.theta = spsa_step(model.theta, loss, iteration++, config.spsa, rng);
                    for (double t : model.theta) {
                        if (!std::isfinite(t)) {
                            throw TrainingAborted("non-finite parameter during SPSA at epoch " +
                                                  std::to_string(epoch));
                        }
                    }
                }
            }
            const double ak = config.spsa.a / std::pow(static_cast<double>(iteration), config.spsa.alpha);
            record("spsa", ak, 0.0, 0, noisy_pipeline, start);
        }
    }

    model.theta = best_theta;
    result.model = std::move(model);
    return result;
}

} // namespace qcbm
