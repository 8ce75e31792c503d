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

#include "dbp/fusion.hpp"
#include "dbp/sinr.hpp"

#include <catch_amalgamated.hpp>

using namespace dbp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

struct Setup
{
    SpatialModel model;
    EstimationModel est;
    ReceiverParams params;
    Real noise;
    ChannelRealization real;
    LocalReceivers recv;
    SinrStatistics stats;
};

Setup make_setup(Real noise, Real s, std::uint64_t seed)
{
    const Partition p({3, 5});
    SpatialModel m = ula_spatial_model(8, 3, p);
    EstimationModel est = build_estimation_model(m, s);
    ReceiverParams params = default_params(m, noise, s);
    RngStream rng(seed);
    ChannelRealization real = sample_estimated_channel(est, rng);
    LocalReceivers recv = build_local_receivers(real.estimated, p, params);
    SinrStatistics stats = sinr_statistics(recv, real, est, noise);
    return {std::move(m), std::move(est), std::move(params), noise, std::move(real), std::move(recv), std::move(stats)};
}

} // namespace

TEST_CASE("statistics match the conditional expectation over channel error, data and noise")
{
    const Setup su = make_setup(0.1, 0.1, 21);
    const Index N = 8, U = 4;
    RowVector alpha(2);
    alpha << Complex(0.7, 0.2), Complex(0.4, -0.1);

    // Draw h_j | h_hat_j ~ CN(V_j h_hat_j, W_j), symbols and noise; average the fused error.
    RngStream rng(22);
    const int n = 100000;
    Complex corr = 0;
    Real power = 0, err = 0;
    for (int t = 0; t < n; ++t)
    {
        Vector y = std::sqrt(su.noise) * sample_standard_complex_gaussian(N, rng);
        const Vector x = sample_standard_complex_gaussian(U, rng);
        for (Index j = 0; j < U; ++j)
        {
            const UserEstimation &u = su.est.user(j);
            const Vector h = u.V * su.real.estimated.col(j) + u.W_sqrt * sample_standard_complex_gaussian(N, rng);
            y += h * x[j];
        }
        const Complex out = (alpha * su.recv.D_r.adjoint() * y)(0);
        corr += out * std::conj(x[0]);
        power += std::norm(out);
        err += std::norm(out - x[0]);
    }
    corr /= Real(n);
    power /= Real(n);
    err /= Real(n);
    const Real gamma_mc = std::norm(corr) / (power - std::norm(corr));

    const SinrResult exact = exact_sinr(alpha, su.stats);
    CHECK_THAT(gamma_mc, WithinRel(exact.gamma, 0.03));
    CHECK_THAT(err, WithinRel(conditional_mse(alpha, su.stats), 0.02));
    CHECK(std::abs(corr - (alpha * su.stats.m)(0)) < 0.02 * std::abs((alpha * su.stats.m)(0)));
}

TEST_CASE("statistics are assembled from posterior means of the interferers")
{
    const Setup su = make_setup(0.05, 0.2, 5);
    const Matrix &Dr = su.recv.D_r;
    const Vector m = Dr.adjoint() * su.real.posterior_mean.col(0);
    const Matrix Ht = su.real.posterior_mean.rightCols(3);
    Matrix C = Ht * Ht.adjoint() + su.est.W();
    C.diagonal().array() += su.noise;
    CHECK((su.stats.m - m).norm() < 1e-12);
    CHECK((su.stats.M - Dr.adjoint() * C * Dr).norm() < 1e-12 * su.stats.M.norm());
    CHECK(is_hermitian(su.stats.M));
}

TEST_CASE("gamma, mse and rate are consistent")
{
    const Setup su = make_setup(0.01, 0.01, 6);
    RowVector alpha = RowVector::Ones(2);
    const SinrResult r = exact_sinr(alpha, su.stats);
    const Complex am = (alpha * su.stats.m)(0);
    const Real den = (alpha * su.stats.M * alpha.adjoint())(0, 0).real();
    CHECK_THAT(r.gamma, WithinRel(std::norm(am) / den, 1e-13));
    CHECK_THAT(r.mse, WithinRel(den + std::norm(am) - 2 * am.real() + 1, 1e-13));
    CHECK_THAT(r.rate_bits, WithinRel(std::log2(1 + r.gamma), 1e-13));
    // Gamma is invariant to scaling alpha; the MSE is not.
    const SinrResult r2 = exact_sinr(Complex(0, 3) * alpha, su.stats);
    CHECK_THAT(r2.gamma, WithinRel(r.gamma, 1e-12));
    CHECK_THROWS_AS(exact_sinr(RowVector::Zero(2), su.stats), NumericError);
}

TEST_CASE("optimal sinr is the generalized Rayleigh maximum")
{
    const Setup su = make_setup(0.02, 0.05, 7);
    // Oracle: largest generalized eigenvalue of (m m^H, M).
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(su.stats.m * su.stats.m.adjoint(), su.stats.M);
    const Real lmax = ges.eigenvalues().maxCoeff();
    CHECK_THAT(optimal_sinr(su.stats), WithinRel(lmax, 1e-10));
    CHECK_THAT(exact_sinr(lfoc_weights(su.stats).alpha, su.stats).gamma, WithinRel(lmax, 1e-10));
}

TEST_CASE("single cluster, perfect CSI: classical MMSE SINR")
{
    const Partition p({10});
    const SpatialModel m = ula_spatial_model(10, 4, p);
    const Real noise = 0.1;
    const EstimationModel est = build_estimation_model(m, 0);
    const ReceiverParams params = default_params(m, noise, 0);
    RngStream rng(8);
    const ChannelRealization r = sample_estimated_channel(est, rng);
    const LocalReceivers recv = build_local_receivers(r.estimated, p, params);
    const SinrStatistics st = sinr_statistics(recv, r, est, noise);
    // h0^H (H1 H1^H + sigma^2 I)^{-1} h0
    const Matrix H1 = r.true_channel.rightCols(4);
    Matrix C = H1 * H1.adjoint();
    C.diagonal().array() += noise;
    const Real ref = (r.true_channel.col(0).adjoint() * C.inverse() * r.true_channel.col(0))(0).real();
    CHECK_THAT(exact_sinr(RowVector::Ones(1), st).gamma, WithinRel(ref, 1e-9));
}
