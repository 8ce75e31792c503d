// SPDX-License-Identifier: Apache-2.0
//
// dbp - decentralized baseband processing for massive MIMO uplink
// Copyright (C) 2026 The dbp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "dbp/channel.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

namespace dbp
{

GaussLegendreRule gauss_legendre(Index order)
{
    if (order < 1)
        throw InvalidInput("gauss_legendre: order must be positive");
    GaussLegendreRule rule{RealVector(order), RealVector(order)};
    const Index half = (order + 1) / 2;
    for (Index i = 0; i < half; ++i)
    {
        // Newton on P_n starting from the Tricomi approximation of the i-th root.
        Real x = std::cos(std::numbers::pi * (Real(i) + 0.75) / (Real(order) + 0.5));
        Real dp = 0;
        for (int iter = 0; iter < 100; ++iter)
        {
            Real p0 = 1, p1 = x;
            for (Index n = 2; n <= order; ++n)
            {
                const Real p2 = ((2 * Real(n) - 1) * x * p1 - (Real(n) - 1) * p0) / Real(n);
                p0 = p1;
                p1 = p2;
            }
            if (order == 1)
                p0 = 1;
            dp = Real(order) * (x * p1 - p0) / (x * x - 1);
            const Real dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // Recompute the derivative at the converged node.
        Real p0 = 1, p1 = x;
        for (Index n = 2; n <= order; ++n)
        {
            const Real p2 = ((2 * Real(n) - 1) * x * p1 - (Real(n) - 1) * p0) / Real(n);
            p0 = p1;
            p1 = p2;
        }
        if (order == 1)
            p0 = 1;
        dp = Real(order) * (x * p1 - p0) / (x * x - 1);
        const Real w = 2 / ((1 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1)
        rule.nodes[half - 1] = 0;
    return rule;
}

namespace
{

const GaussLegendreRule &cached_rule(Index order)
{
    static std::mutex mutex;
    static std::map<Index, GaussLegendreRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, gauss_legendre(order)).first;
    return it->second;
}

// First column of the Toeplitz correlation, c(d) = [C]_{d, 0} for d = 0..N-1.
Vector correlation_lags(const CorrelationParams &p, Index order)
{
    const GaussLegendreRule &rule = cached_rule(order);
    const Real pi = std::numbers::pi;
    const Real norm = 1 / std::sqrt(2 * pi * p.rms_spread_deg * p.rms_spread_deg);
    Vector lags = Vector::Zero(p.antennas);
    for (Index i = 0; i < order; ++i)
    {
        const Real phi = 180 * rule.nodes[i];
        const Real dev = phi - p.mean_angle_deg;
        const Real weight = 180 * rule.weights[i] * norm * std::exp(-dev * dev / (2 * p.rms_spread_deg * p.rms_spread_deg));
        if (weight == 0)
            continue;
        const Real step = 2 * pi * p.antenna_spacing * std::sin(pi * phi / 180);
        for (Index d = 0; d < p.antennas; ++d)
            lags[d] += weight * std::polar(Real(1), step * Real(d));
    }
    return lags;
}

} // namespace

Matrix correlation_matrix(const CorrelationParams &p)
{
    if (!(p.rms_spread_deg > 0))
        throw InvalidInput("correlation_matrix: rms angle spread must be positive");
    if (!(p.antenna_spacing > 0))
        throw InvalidInput("correlation_matrix: antenna spacing must be positive");
    if (p.antennas < 1)
        throw InvalidInput("correlation_matrix: need at least one antenna");

    constexpr Index max_order = 16384;
    Index order = 64;
    Vector lags = correlation_lags(p, order);
    Real change = std::numeric_limits<Real>::infinity();
    while (order < max_order)
    {
        order *= 2;
        Vector refined = correlation_lags(p, order);
        change = (refined - lags).cwiseAbs().maxCoeff();
        lags = std::move(refined);
        if (change < 1e-9)
            break;
    }
    if (change > 1e-8)
        throw NumericError("correlation_matrix: quadrature did not converge (last change " + std::to_string(change) + ")");

    Matrix C(p.antennas, p.antennas);
    for (Index m = 0; m < p.antennas; ++m)
    {
        C(m, m) = Complex(lags[0].real(), 0);
        for (Index n = 0; n < m; ++n)
        {
            C(m, n) = lags[m - n];
            C(n, m) = std::conj(lags[m - n]);
        }
    }
    return clip_to_psd(C);
}

SpatialModel::SpatialModel(std::vector<Matrix> correlation, Partition partition)
    : correlation_(std::move(correlation)), partition_(std::move(partition))
{
    if (correlation_.empty())
        throw InvalidInput("SpatialModel: at least one user is required");
    const Index n = partition_.antennas();
    min_eigenvalue_ = std::numeric_limits<Real>::infinity();
    sqrt_.reserve(correlation_.size());
    for (std::size_t j = 0; j < correlation_.size(); ++j)
    {
        Matrix &R = correlation_[j];
        if (R.rows() != n || R.cols() != n)
            throw InvalidInput("SpatialModel: correlation of user " + std::to_string(j) + " is not " +
                               std::to_string(n) + "x" + std::to_string(n));
        if (!is_hermitian(R))
            throw InvalidInput("SpatialModel: correlation of user " + std::to_string(j) + " is not Hermitian");
        R = hermitian_part(R);
        sqrt_.push_back(psd_sqrt(R));
        Eigen::SelfAdjointEigenSolver<Matrix> eig(R, Eigen::EigenvaluesOnly);
        min_eigenvalue_ = std::min(min_eigenvalue_, eig.eigenvalues().minCoeff());
    }
}

SpatialModel SpatialModel::repartitioned(Partition partition) const
{
    if (partition.antennas() != antennas())
        throw InvalidInput("SpatialModel::repartitioned: antenna count mismatch");
    SpatialModel copy = *this;
    copy.partition_ = std::move(partition);
    return copy;
}

bool SpatialModel::is_block_diagonal(Real tol) const
{
    for (const Matrix &R : correlation_)
    {
        const Real scale = R.norm();
        for (Index k = 0; k < partition_.clusters(); ++k)
            for (Index l = 0; l < partition_.clusters(); ++l)
                if (k != l && block(R, partition_, k, l).norm() > tol * scale)
                    return false;
    }
    return true;
}

SpatialModel ula_spatial_model(Index antennas, Index interferers, const Partition &partition, Real antenna_spacing)
{
    if (antennas < 1 || interferers < 1)
        throw InvalidInput("ula_spatial_model: need N >= 1 and M >= 1");
    if (partition.antennas() != antennas)
        throw InvalidInput("ula_spatial_model: partition does not cover N antennas");
    std::vector<Matrix> R;
    R.reserve(static_cast<std::size_t>(interferers + 1));
    const Real m = static_cast<Real>(interferers);
    for (Index j = 0; j <= interferers; ++j)
    {
        CorrelationParams p;
        p.mean_angle_deg = Real(j) / (180 * m);
        p.rms_spread_deg = 10 + Real(j) / (10 * m);
        p.antenna_spacing = antenna_spacing;
        p.antennas = antennas;
        R.push_back(correlation_matrix(p));
    }
    return SpatialModel(std::move(R), partition);
}

SpatialModel iid_spatial_model(Index antennas, Index interferers, const Partition &partition)
{
    if (antennas < 1 || interferers < 0)
        throw InvalidInput("iid_spatial_model: need N >= 1 and M >= 0");
    if (partition.antennas() != antennas)
        throw InvalidInput("iid_spatial_model: partition does not cover N antennas");
    std::vector<Matrix> R(static_cast<std::size_t>(interferers + 1), Matrix::Identity(antennas, antennas));
    return SpatialModel(std::move(R), partition);
}

SpatialModel cluster_decorrelated(const SpatialModel &model)
{
    std::vector<Matrix> R;
    R.reserve(static_cast<std::size_t>(model.users()));
    for (const Matrix &Rj : model.correlations())
        R.push_back(block_diagonal(Rj, model.partition()));
    return SpatialModel(std::move(R), model.partition());
}

Matrix sample_true_channel(const SpatialModel &model, RngStream &rng)
{
    Matrix H(model.antennas(), model.users());
    for (Index j = 0; j < model.users(); ++j)
        H.col(j) = model.correlation_sqrt(j) * sample_standard_complex_gaussian(model.antennas(), rng);
    return H;
}

nlohmann::json matrix_to_json(const Matrix &A)
{
    std::vector<Real> data;
    data.reserve(static_cast<std::size_t>(2 * A.size()));
    for (Index r = 0; r < A.rows(); ++r)
        for (Index c = 0; c < A.cols(); ++c)
        {
            data.push_back(A(r, c).real());
            data.push_back(A(r, c).imag());
        }
    return {{"rows", A.rows()}, {"cols", A.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json &j)
{
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<Real>>();
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != 2 * rows * cols)
        throw InvalidInput("matrix_from_json: data length does not match rows x cols complex pairs");
    Matrix A(rows, cols);
    std::size_t i = 0;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c, i += 2)
            A(r, c) = Complex(data[i], data[i + 1]);
    return A;
}

nlohmann::json spatial_model_to_json(const SpatialModel &model)
{
    nlohmann::json matrices = nlohmann::json::array();
    for (const Matrix &R : model.correlations())
        matrices.push_back(matrix_to_json(R));
    return {{"format", "dbp.spatial_model"},
            {"version", 1},
            {"partition", model.partition().sizes()},
            {"correlation", std::move(matrices)}};
}

SpatialModel spatial_model_from_json(const nlohmann::json &j)
{
    if (j.value("format", std::string{}) != "dbp.spatial_model")
        throw InvalidInput("spatial model: missing or unknown \"format\" tag");
    if (j.value("version", 0) != 1)
        throw InvalidInput("spatial model: unsupported version");
    std::vector<Matrix> R;
    for (const auto &m : j.at("correlation"))
        R.push_back(matrix_from_json(m));
    return SpatialModel(std::move(R), Partition(j.at("partition").get<std::vector<Index>>()));
}

void save_spatial_model(const SpatialModel &model, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidInput("cannot open " + path + " for writing");
    out << spatial_model_to_json(model).dump() << '\n';
}

SpatialModel load_spatial_model(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open " + path);
    return spatial_model_from_json(nlohmann::json::parse(in));
}

} // namespace dbp
