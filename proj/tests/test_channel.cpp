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

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <catch_amalgamated.hpp>

#include <filesystem>

using namespace dbp;
using Catch::Matchers::WithinAbs;

namespace
{

// Adaptive Gauss-Kronrod evaluation of one correlation entry for lag m - n.
Complex quadrature_entry(Real eta, Real spread, Real spacing, Index lag)
{
    const Real pi = 3.14159265358979323846;
    const Real norm = 1 / std::sqrt(2 * pi * spread * spread);
    auto phase = [&](Real phi) { return 2 * pi * spacing * Real(lag) * std::sin(pi * phi / 180); };
    auto weight = [&](Real phi) { return norm * std::exp(-(phi - eta) * (phi - eta) / (2 * spread * spread)); };
    using boost::math::quadrature::gauss_kronrod;
    const Real re = gauss_kronrod<Real, 61>::integrate(
        [&](Real phi) { return weight(phi) * std::cos(phase(phi)); }, -180, 180, 25, 1e-13);
    const Real im = gauss_kronrod<Real, 61>::integrate(
        [&](Real phi) { return weight(phi) * std::sin(phase(phi)); }, -180, 180, 25, 1e-13);
    return {re, im};
}

} // namespace

TEST_CASE("gauss-legendre integrates polynomials exactly")
{
    const GaussLegendreRule r = gauss_legendre(8);
    // Exact for degree <= 15: int x^14 = 2/15.
    Real s = 0, s0 = 0;
    for (Index i = 0; i < 8; ++i)
    {
        s += r.weights[i] * std::pow(r.nodes[i], 14);
        s0 += r.weights[i];
    }
    CHECK_THAT(s, WithinAbs(2.0 / 15.0, 1e-14));
    CHECK_THAT(s0, WithinAbs(2.0, 1e-14));
}

TEST_CASE("correlation entries match adaptive quadrature")
{
    for (auto [eta, spread, spacing] : {std::tuple{0.0, 10.0, 1.0}, std::tuple{0.5, 10.05, 1.0},
                                        std::tuple{-20.0, 5.0, 0.5}, std::tuple{35.0, 25.0, 2.0}})
    {
        CorrelationParams cp;
        cp.mean_angle_deg = eta;
        cp.rms_spread_deg = spread;
        cp.antenna_spacing = spacing;
        cp.antennas = 12;
        const Matrix C = correlation_matrix(cp);
        for (Index lag : {0, 1, 3, 7, 11})
        {
            const Complex ref = quadrature_entry(eta, spread, spacing, lag);
            CHECK(std::abs(C(lag, 0) - ref) < 1e-8);
            CHECK(std::abs(C(0, lag) - std::conj(ref)) < 1e-8);
        }
    }
}

TEST_CASE("correlation matrix is Hermitian Toeplitz and PSD with unit diagonal")
{
    CorrelationParams cp;
    cp.antennas = 16;
    const Matrix C = correlation_matrix(cp);
    CHECK(is_hermitian(C));
    for (Index i = 1; i < 16; ++i)
        CHECK(std::abs(C(i, i - 1) - C(1, 0)) < 1e-12);
    CHECK_THAT(C(3, 3).real(), WithinAbs(1.0, 1e-9));
    Eigen::SelfAdjointEigenSolver<Matrix> e(C);
    CHECK(e.eigenvalues().minCoeff() >= 0);
}

TEST_CASE("array model uses per-user angles and spreads")
{
    const Index N = 10, M = 4;
    const SpatialModel m = ula_spatial_model(N, M, Partition({4, 6}));
    CHECK(m.users() == M + 1);
    CHECK(m.interferers() == M);
    for (Index j = 0; j <= M; ++j)
    {
        CorrelationParams cp;
        cp.mean_angle_deg = Real(j) / (180.0 * M);
        cp.rms_spread_deg = 10 + Real(j) / (10.0 * M);
        cp.antennas = N;
        CHECK((m.correlation(j) - correlation_matrix(cp)).norm() < 1e-12);
        CHECK((m.correlation_sqrt(j) * m.correlation_sqrt(j) - m.correlation(j)).norm() < 1e-10);
    }
}

TEST_CASE("iid model and cluster decorrelation")
{
    const SpatialModel iid = iid_spatial_model(6, 2, Partition({2, 4}));
    CHECK((iid.correlation(1) - Matrix::Identity(6, 6)).norm() == 0);
    CHECK(iid.is_block_diagonal());
    const SpatialModel ula = ula_spatial_model(6, 2, Partition({2, 4}));
    CHECK_FALSE(ula.is_block_diagonal(1e-6));
    const SpatialModel bd = cluster_decorrelated(ula);
    CHECK(bd.is_block_diagonal());
    CHECK((block(bd.correlation(2), bd.partition(), 1, 1) - block(ula.correlation(2), ula.partition(), 1, 1)).norm() ==
          0);
}

TEST_CASE("spatial model validation")
{
    std::vector<Matrix> r{Matrix::Identity(3, 3)};
    CHECK_THROWS_AS(SpatialModel(r, Partition({2, 2})), InvalidInput);
    Matrix bad = Matrix::Identity(3, 3);
    bad(0, 0) = -1;
    CHECK_THROWS_AS(SpatialModel({bad}, Partition({3})), InvalidInput);
}

TEST_CASE("repartitioning keeps correlations")
{
    const SpatialModel m = ula_spatial_model(8, 2, Partition({4, 4}));
    const SpatialModel n = m.repartitioned(Partition({2, 6}));
    CHECK(n.partition().sizes() == std::vector<Index>{2, 6});
    CHECK((n.correlation(1) - m.correlation(1)).norm() == 0);
    CHECK_THROWS_AS(m.repartitioned(Partition({2, 2})), InvalidInput);
}

TEST_CASE("sampled channel covariance matches R")
{
    const SpatialModel m = ula_spatial_model(6, 1, Partition({3, 3}));
    RngStream rng(3);
    Matrix acc = Matrix::Zero(6, 6);
    const int n = 40000;
    for (int t = 0; t < n; ++t)
    {
        const Matrix H = sample_true_channel(m, rng);
        acc += H.col(1) * H.col(1).adjoint();
    }
    acc /= Real(n);
    CHECK((acc - m.correlation(1)).norm() / m.correlation(1).norm() < 0.03);
}

TEST_CASE("json round trip of matrices and spatial models")
{
    Matrix A(2, 3);
    A << Complex(1, 2), 3, Complex(0, -1), 4, 5, Complex(6, 7);
    const Matrix B = matrix_from_json(matrix_to_json(A));
    CHECK((A - B).norm() == 0);

    const SpatialModel m = ula_spatial_model(5, 2, Partition({2, 3}));
    const auto path = std::filesystem::temp_directory_path() / "dbp_test_model.json";
    save_spatial_model(m, path.string());
    const SpatialModel n = load_spatial_model(path.string());
    std::filesystem::remove(path);
    CHECK(n.partition() == m.partition());
    for (Index j = 0; j < 3; ++j)
        CHECK((n.correlation(j) - m.correlation(j)).norm() < 1e-15);
    CHECK_THROWS_AS(matrix_from_json(nlohmann::json{{"rows", 2}, {"cols", 2}, {"data", {1, 2}}}), InvalidInput);
}
