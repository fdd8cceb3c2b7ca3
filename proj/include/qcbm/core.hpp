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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace qcbm {

inline constexpr double kPi = 3.14159265358979323846;

/// Raised for invalid user-supplied configuration; maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when training hits a non-finite loss; maps to CLI exit code 2.
class TrainingAborted : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Derives an independent stream from a master seed and a stream index.
inline Rng derive_rng(std::uint64_t master_seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool is_power_of_two(std::size_t x) { return x != 0 && (x & (x - 1)) == 0; }

inline unsigned log2_exact(std::size_t x) {
    if (!is_power_of_two(x)) {
        throw std::invalid_argument("value " + std::to_string(x) +
                                    " is not a power of two");
    }
    unsigned k = 0;
    while ((std::size_t{1} << k) != x) {
        ++k;
    }
    return k;
}

} // namespace qcbm
