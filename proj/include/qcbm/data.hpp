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
 * Event ingestion, preprocessing, discretization and a synthetic generator
 * shaped like muon scattering events (outgoing energy, transverse momentum,
 * pseudorapidity) conditioned on the incoming muon energy.
 */

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "qcbm/core.hpp"
#include "qcbm/distribution.hpp"

namespace qcbm {

struct EventRecord {
    double e_out{0.0}; ///< outgoing muon energy, GeV
    double pt{0.0};    ///< transverse momentum, GeV
    double eta{0.0};   ///< pseudorapidity
    double e_in{0.0};  ///< incoming muon energy (condition), GeV

    bool operator==(const EventRecord &) const = default;
};

inline constexpr std::size_t kNumFeatures = 3;

/// Row-major matrix of feature vectors.
struct FeatureMatrix {
    std::size_t cols{0};
    std::vector<double> values;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t n_rows, std::size_t n_cols)
        : cols(n_cols), values(n_rows * n_cols, 0.0) {}

    [[nodiscard]] std::size_t rows() const { return cols == 0 ? 0 : values.size() / cols; }
    double &operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return std::span<const double>(values).subspan(r * cols, cols);
    }

    /// Keeps only the listed columns, in the listed order.
    [[nodiscard]] FeatureMatrix select(const std::vector<std::size_t> &columns) const {
        FeatureMatrix out(rows(), columns.size());
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                out(r, c) = (*this)(r, columns.at(c));
            }
        }
        return out;
    }
};

struct PreprocessParams {
    double incoming_energy_mean{1.0};
    double pt_exponent{0.1};
    std::array<double, kNumFeatures> mean{};
    std::array<double, kNumFeatures> std{};
};

struct Standardization {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Per-column z-score with population standard deviation. Modifies `m`.
inline Standardization standardize_columns(FeatureMatrix &m) {
    if (m.rows() == 0) {
        throw std::invalid_argument("cannot standardize an empty feature matrix");
    }
    Standardization s{std::vector<double>(m.cols, 0.0), std::vector<double>(m.cols, 0.0)};
    const auto n = static_cast<double>(m.rows());
    for (std::size_t c = 0; c < m.cols; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            mean += m(r, c);
        }
        mean /= n;
        double var = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            var += (m(r, c) - mean) * (m(r, c) - mean);
        }
        var /= n;
        const double sd = std::sqrt(var);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            throw std::domain_error("feature " + std::to_string(c) +
                                    " has zero standard deviation");
        }
        for (std::size_t r = 0; r < m.rows(); ++r) {
            m(r, c) = (m(r, c) - mean) / sd;
        }
        s.mean[c] = mean;
        s.std[c] = sd;
    }
    return s;
}

namespace detail {

inline FeatureMatrix power_transform(std::span<const EventRecord> events, double e_in_mean,
                                     double pt_exponent) {
    FeatureMatrix m(events.size(), kNumFeatures);
    for (std::size_t r = 0; r < events.size(); ++r) {
        m(r, 0) = events[r].e_out / e_in_mean;
        m(r, 1) = std::pow(events[r].pt, pt_exponent);
        m(r, 2) = events[r].eta;
    }
    return m;
}

} // namespace detail

/**
 * Energy divided by the mean incoming energy, pt raised to 0.1, then every
 * feature z-scored. Returns the features and the fitted parameters.
 */
inline std::pair<FeatureMatrix, PreprocessParams> preprocess(std::span<const EventRecord> events) {
    if (events.empty()) {
        throw std::invalid_argument("cannot preprocess an empty event list");
    }
    PreprocessParams params;
    double e_in_sum = 0.0;
    for (const auto &e : events) {
        if (e.pt < 0.0) {
            throw std::invalid_argument("negative transverse momentum");
        }
        e_in_sum += e.e_in;
    }
    params.incoming_energy_mean = e_in_sum / static_cast<double>(events.size());
    if (!(params.incoming_energy_mean > 0.0)) {
        throw std::invalid_argument("mean incoming energy must be positive");
    }
    FeatureMatrix m = detail::power_transform(events, params.incoming_energy_mean, params.pt_exponent);
    const auto s = standardize_columns(m);
    std::copy(s.mean.begin(), s.mean.end(), params.mean.begin());
    std::copy(s.std.begin(), s.std.end(), params.std.begin());
    return {std::move(m), params};
}

/// Applies already-fitted parameters (e.g. training statistics to test events).
inline FeatureMatrix transform(std::span<const EventRecord> events, const PreprocessParams &params) {
    FeatureMatrix m = detail::power_transform(events, params.incoming_energy_mean, params.pt_exponent);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < kNumFeatures; ++c) {
            m(r, c) = (m(r, c) - params.mean[c]) / params.std[c];
        }
    }
    return m;
}

/// Maps preprocessed rows back to physical (e_out, pt, eta).
inline FeatureMatrix inverse_transform(const FeatureMatrix &features, const PreprocessParams &params) {
    if (features.cols != kNumFeatures) {
        throw std::invalid_argument("inverse transform expects three feature columns");
    }
    FeatureMatrix out(features.rows(), kNumFeatures);
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const double e = features(r, 0) * params.std[0] + params.mean[0];
        const double pt = features(r, 1) * params.std[1] + params.mean[1];
        out(r, 0) = e * params.incoming_energy_mean;
        out(r, 1) = std::pow(std::max(pt, 0.0), 1.0 / params.pt_exponent);
        out(r, 2) = features(r, 2) * params.std[2] + params.mean[2];
    }
    return out;
}

struct BinAxis {
    std::size_t bins{2};
    double lower{0.0};
    double upper{1.0};

    [[nodiscard]] double width() const { return (upper - lower) / static_cast<double>(bins); }
    [[nodiscard]] double center(std::size_t k) const {
        return lower + (static_cast<double>(k) + 0.5) * width();
    }

    /// Half-open bins, last bin closed; out-of-range values go to the edge bins.
    [[nodiscard]] std::size_t bin_of(double x) const {
        if (!(x > lower)) {
            return 0;
        }
        if (x >= upper) {
            return bins - 1;
        }
        auto k = static_cast<std::size_t>((x - lower) / width());
        return std::min(k, bins - 1);
    }
};

struct BinningSpec {
    std::vector<BinAxis> axes;

    void validate() const {
        if (axes.empty()) {
            throw std::invalid_argument("binning needs at least one axis");
        }
        for (const auto &a : axes) {
            if (!is_power_of_two(a.bins)) {
                throw std::invalid_argument("bin counts must be powers of two");
            }
            if (!(a.lower < a.upper)) {
                throw std::invalid_argument("bin axis requires lower < upper");
            }
        }
    }

    [[nodiscard]] std::vector<unsigned> register_bits() const {
        std::vector<unsigned> bits;
        for (const auto &a : axes) {
            bits.push_back(log2_exact(a.bins));
        }
        return bits;
    }
};

/// Axes spanning the per-column min/max of `features`.
inline BinningSpec binning_from_range(const FeatureMatrix &features,
                                      const std::vector<std::size_t> &bins_per_feature) {
    if (features.rows() == 0 || bins_per_feature.size() != features.cols) {
        throw std::invalid_argument("binning needs data and one bin count per feature");
    }
    BinningSpec spec;
    for (std::size_t c = 0; c < features.cols; ++c) {
        double lo = features(0, c);
        double hi = lo;
        for (std::size_t r = 1; r < features.rows(); ++r) {
            lo = std::min(lo, features(r, c));
            hi = std::max(hi, features(r, c));
        }
        spec.axes.push_back({bins_per_feature[c], lo, hi});
    }
    spec.validate();
    return spec;
}

/// Flat joint bin index per row, feature 0 in the low bits.
inline std::vector<std::size_t> bin_indices(const FeatureMatrix &features, const BinningSpec &spec) {
    spec.validate();
    if (features.cols != spec.axes.size()) {
        throw std::invalid_argument("binning dimension does not match feature count");
    }
    const auto bits = spec.register_bits();
    std::vector<std::size_t> out(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        std::size_t index = 0;
        unsigned off = 0;
        for (std::size_t c = 0; c < features.cols; ++c) {
            index |= spec.axes[c].bin_of(features(r, c)) << off;
            off += bits[c];
        }
        out[r] = index;
    }
    return out;
}

/// Normalized joint histogram over bin tuples.
inline DiscreteDistribution discretize(const FeatureMatrix &features, const BinningSpec &spec) {
    if (features.rows() == 0) {
        throw std::invalid_argument("cannot discretize an empty feature matrix");
    }
    const auto bits = spec.register_bits();
    DiscreteDistribution like(std::vector<double>(std::size_t{1} << std::accumulate(bits.begin(), bits.end(), 0U), 0.0), bits);
    return histogram_of(bin_indices(features, spec), like);
}

/// Per-feature bin centers of a flat joint index.
inline std::vector<double> bin_centers(std::size_t index, const BinningSpec &spec) {
    std::vector<double> out;
    unsigned off = 0;
    for (const auto &a : spec.axes) {
        const unsigned b = log2_exact(a.bins);
        out.push_back(a.center((index >> off) & (a.bins - 1)));
        off += b;
    }
    return out;
}

/// Parameters of the synthetic event generator.
struct SynthParams {
    /// Off-diagonal target correlations (E,pt), (E,eta), (pt,eta) of the latent Gaussian.
    std::array<double, 3> correlations{0.43, 0.89, 0.61};
    double energy_fraction{0.55};
    double energy_log_width{0.18};
    /// Fraction of the incoming-energy offset passed to the outgoing energy location.
    double energy_drift{0.25};
    double pt_log_location{0.35};
    double pt_log_width{0.09};
    double pt_log_slope{0.0008};
    double eta_location{2.2};
    double eta_width{0.7};
    double eta_slope{0.003};
    double reference_energy{125.0};
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

inline Matrix3 correlation_matrix(const std::array<double, 3> &off) {
    return {{{1.0, off[0], off[1]}, {off[0], 1.0, off[2]}, {off[1], off[2], 1.0}}};
}

/**
 * Draws correlated standard normals through a Cholesky factor of
 * `target_corr` and maps them to physical ranges with monotone transforms
 * whose location moves linearly with the incoming energy.
 */
inline std::vector<EventRecord> synthesize_mfc(std::size_t n_events, double e_in,
                                               const Matrix3 &target_corr, std::uint64_t seed,
                                               const SynthParams &params = {}) {
    Eigen::Matrix3d corr;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            corr(i, j) = target_corr[i][j];
        }
    }
    if (!corr.isApprox(corr.transpose()) || std::abs(corr(0, 0) - 1.0) > 1e-12 ||
        std::abs(corr(1, 1) - 1.0) > 1e-12 || std::abs(corr(2, 2) - 1.0) > 1e-12) {
        throw std::invalid_argument("target correlation must be symmetric with unit diagonal");
    }
    Eigen::LLT<Eigen::Matrix3d> llt(corr);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("target correlation is not positive definite");
    }
    const Eigen::Matrix3d l = llt.matrixL();
    if (!(e_in > 0.0)) {
        throw std::invalid_argument("incoming energy must be positive");
    }

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double shift = e_in - params.reference_energy;
    std::vector<EventRecord> events(n_events);
    for (auto &ev : events) {
        Eigen::Vector3d u(normal(rng), normal(rng), normal(rng));
        const Eigen::Vector3d z = l * u;
        ev.e_out = (params.reference_energy + params.energy_drift * shift) * params.energy_fraction *
                   std::exp(params.energy_log_width * z(0));
        ev.pt = std::exp((params.pt_log_location + params.pt_log_slope * shift +
                          params.pt_log_width * z(1)) / 0.1);
        ev.eta = params.eta_location + params.eta_slope * shift + params.eta_width * z(2);
        ev.e_in = e_in;
    }
    return events;
}

/// Seeded shuffle split into equal-size train and test halves (train gets the extra event).
inline std::pair<std::vector<EventRecord>, std::vector<EventRecord>>
split_train_test(std::span<const EventRecord> events, std::uint64_t seed) {
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng() % i]);
    }
    const std::size_t n_train = (events.size() + 1) / 2;
    std::vector<EventRecord> train;
    std::vector<EventRecord> test;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : test).push_back(events[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
            cell.pop_back();
        }
        std::size_t start = cell.find_first_not_of(' ');
        cells.push_back(start == std::string::npos ? std::string{} : cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

inline double parse_double(const std::string &s, bool &ok) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
    return v;
}

} // namespace detail

/**
 * Reads events from a CSV with a header naming e_out, pt, eta and e_in
 * (any order, extra columns ignored). Data rows are numbered from 1 in
 * error messages.
 */
inline std::vector<EventRecord> load_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("'" + path + "' has no header row");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line.erase(0, 3); // UTF-8 BOM
    }
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) {
        column[header[i]] = i;
    }
    std::array<std::size_t, 4> idx{};
    const std::array<const char *, 4> names{"e_out", "pt", "eta", "e_in"};
    for (std::size_t k = 0; k < names.size(); ++k) {
        auto it = column.find(names[k]);
        if (it == column.end()) {
            throw std::invalid_argument("'" + path + "' is missing column '" + names[k] + "'");
        }
        idx[k] = it->second;
    }
    std::vector<EventRecord> events;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        ++row;
        const auto cells = detail::split_csv_line(line);
        std::array<double, 4> v{};
        for (std::size_t k = 0; k < 4; ++k) {
            bool ok = idx[k] < cells.size();
            if (ok) {
                v[k] = detail::parse_double(cells[idx[k]], ok);
            }
            if (!ok) {
                throw std::invalid_argument("'" + path + "' row " + std::to_string(row) +
                                            ": cannot parse column '" + names[k] + "'");
            }
        }
        events.push_back({v[0], v[1], v[2], v[3]});
    }
    return events;
}

inline void write_csv(const std::string &path, std::span<const EventRecord> events) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out.precision(17);
    out << "e_out,pt,eta,e_in\n";
    for (const auto &e : events) {
        out << e.e_out << ',' << e.pt << ',' << e.eta << ',' << e.e_in << '\n';
    }
}

} // namespace qcbm
