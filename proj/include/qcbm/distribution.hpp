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
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcbm/core.hpp"

namespace qcbm {

/**
 * Probability vector over 2^N bins, optionally split into per-feature
 * registers.
 *
 * Feature f occupies `register_bits[f]` consecutive bits of the flat bin
 * index, feature 0 in the least significant bits. A single feature over
 * the whole index is the one-dimensional case.
 */
struct DiscreteDistribution {
    std::vector<double> probs;
    std::vector<unsigned> register_bits;
    std::optional<double> condition;

    DiscreteDistribution() = default;

    DiscreteDistribution(std::vector<double> p, std::vector<unsigned> bits,
                         std::optional<double> cond = std::nullopt)
        : probs(std::move(p)), register_bits(std::move(bits)), condition(cond) {
        unsigned total = std::accumulate(register_bits.begin(), register_bits.end(), 0U);
        if (probs.size() != (std::size_t{1} << total)) {
            throw std::invalid_argument("distribution size " + std::to_string(probs.size()) +
                                        " does not match register layout of " +
                                        std::to_string(total) + " bits");
        }
    }

    /// One-dimensional distribution over probs.size() bins.
    static DiscreteDistribution flat(std::vector<double> p) {
        unsigned bits = log2_exact(p.size());
        return {std::move(p), {bits}};
    }

    [[nodiscard]] std::size_t size() const { return probs.size(); }
    [[nodiscard]] std::size_t n_features() const { return register_bits.size(); }

    [[nodiscard]] unsigned total_bits() const {
        return std::accumulate(register_bits.begin(), register_bits.end(), 0U);
    }

    [[nodiscard]] unsigned offset_of(std::size_t feature) const {
        unsigned off = 0;
        for (std::size_t f = 0; f < feature; ++f) {
            off += register_bits[f];
        }
        return off;
    }

    [[nodiscard]] std::vector<std::size_t> bin_tuple(std::size_t index) const {
        std::vector<std::size_t> tuple(register_bits.size());
        unsigned off = 0;
        for (std::size_t f = 0; f < register_bits.size(); ++f) {
            tuple[f] = (index >> off) & ((std::size_t{1} << register_bits[f]) - 1);
            off += register_bits[f];
        }
        return tuple;
    }

    [[nodiscard]] std::size_t index_of(const std::vector<std::size_t> &tuple) const {
        if (tuple.size() != register_bits.size()) {
            throw std::invalid_argument("bin tuple dimension mismatch");
        }
        std::size_t index = 0;
        unsigned off = 0;
        for (std::size_t f = 0; f < tuple.size(); ++f) {
            if (tuple[f] >= (std::size_t{1} << register_bits[f])) {
                throw std::out_of_range("bin index out of range for feature " + std::to_string(f));
            }
            index |= tuple[f] << off;
            off += register_bits[f];
        }
        return index;
    }

    [[nodiscard]] double sum() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }
};

inline void require_same_bins(const DiscreteDistribution &a, const DiscreteDistribution &b) {
    if (a.size() != b.size() || a.register_bits != b.register_bits) {
        throw std::invalid_argument("distributions are defined over different bin sets");
    }
}

/// Empirical distribution of bin indices on the layout of `like`.
inline DiscreteDistribution histogram_of(const std::vector<std::size_t> &indices,
                                         const DiscreteDistribution &like) {
    std::vector<double> p(like.size(), 0.0);
    for (std::size_t i : indices) {
        p.at(i) += 1.0;
    }
    if (!indices.empty()) {
        for (double &x : p) {
            x /= static_cast<double>(indices.size());
        }
    }
    return {std::move(p), like.register_bits, like.condition};
}

} // namespace qcbm
