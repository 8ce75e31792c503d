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
    EstimationModel est;
    Real noise;
    ChannelRealization real;
    LocalReceivers recv;
    SinrStatistics stats;
};

Setup make_setup(std::uint64_t seed)
{
    const Partition p({4, 3, 5});
    const SpatialModel m = ula_spatial_model(12, 5, p);
    const Real noise = 0.03, s = 0.05;
    EstimationModel est = build_estimation_model(m, s);
    RngStream rng(seed);
    ChannelRealization real = sample_estimated_channel(est, rng);
    LocalReceivers recv = build_local_receivers(real.estimated, p, default_params(m, noise, s));
    SinrStatistics stats = sinr_statistics(recv, real, est, noise);
    return {std::move(est), noise, std::move(real), std::move(recv), std::move(stats)};
}

} // namespace

TEST_CASE("scheme names")
{
    for (Scheme s : {Scheme::lfoc, Scheme::lfsc, Scheme::lfcc_uniform, Scheme::lfcc_proportional, Scheme::lfcc_matched,
                     Scheme::custom})
        CHECK(parse_scheme(scheme_name(s)) == s);
    CHECK_THROWS_AS(parse_scheme("lmmse"), InvalidInput);
}

TEST_CASE("LFOC weights minimize the conditional MSE")
{
    const Setup su = make_setup(1);
    const RowVector a = lfoc_weights(su.stats).alpha;
    Matrix G = su.stats.M + su.stats.m * su.stats.m.adjoint();
    const RowVector ref = G.inverse() * su.stats.m;
    // alpha = m^H (M + m m^H)^{-1}; G is Hermitian so this is (G^{-1} m)^H.
    CHECK((a - ref.conjugate()).norm() < 1e-12 * a.norm());
    const Real best = conditional_mse(a, su.stats);
    RngStream rng(2);
    for (int t = 0; t < 50; ++t)
    {
        const RowVector d = 0.01 * sample_standard_complex_gaussian(3, rng).transpose();
        CHECK(conditional_mse(a + d, su.stats) >= best);
    }
}

TEST_CASE("LFOC matches the direct formula from full matrices")
{
    const Setup su = make_setup(3);
    const FusionWeights w = lfoc_weights(su.recv, su.real, su.est, su.noise);
    CHECK(w.scheme == Scheme::lfoc);
    CHECK((w.alpha - lfoc_weights(su.stats).alpha).norm() < 1e-14);
}

TEST_CASE("LFSC weights from intermediates equal the centrally assembled solution")
{
    const Setup su = make_setup(4);
    const auto inter = lfsc_intermediates(su.recv, su.real, su.est, su.noise);
    const FusionWeights w = lfsc_weights(inter);
    const Matrix &Dr = su.recv.D_r;
    Matrix C = su.real.estimated * su.real.estimated.adjoint() + su.est.DW();
    C.diagonal().array() += su.noise;
    const Matrix Mh = Dr.adjoint() * C * Dr;
    const Vector mh = Dr.adjoint() * su.real.estimated.col(0);
    const Vector x = Mh.inverse() * mh;
    CHECK((w.alpha - x.adjoint()).norm() < 1e-10 * x.norm());
    CHECK(w.scheme == Scheme::lfsc);
}

TEST_CASE("LFCC weights")
{
    const Partition p({2, 6});
    const FusionWeights u = lfcc_weights(p, LfccMode::uniform);
    const FusionWeights q = lfcc_weights(p, LfccMode::proportional);
    CHECK(u.alpha(0) == Complex(0.5));
    CHECK(q.alpha(0) == Complex(0.25));
    CHECK(q.alpha(1) == Complex(0.75));
}

TEST_CASE("matched weights")
{
    RealVector v(3);
    v << 1.0, 2.0, 0.5;
    Matrix d = Matrix::Identity(3, 3);
    d(1, 1) = 4;
    d(2, 2) = 0;
    const FusionWeights w = lfcc_matched_weights(v, d);
    CHECK_THAT(w.alpha(0).real(), WithinAbs(2.0, 1e-15));
    CHECK_THAT(w.alpha(1).real(), WithinAbs(1.5, 1e-15));
    CHECK(w.alpha(2) == Complex(0));
}

TEST_CASE("fuse is the weighted sum")
{
    RowVector a(2);
    a << Complex(1, 1), 2;
    Vector x(2);
    x << 3, Complex(0, 1);
    CHECK(fuse({a, Scheme::custom}, x) == Complex(3, 5));
    CHECK_THROWS_AS(fuse({a, Scheme::custom}, Vector::Ones(3)), InvalidInput);
}

TEST_CASE("LFOC dominates the other schemes on every realization")
{
    for (std::uint64_t seed = 10; seed < 40; ++seed)
    {
        const Setup su = make_setup(seed);
        const Real opt = exact_sinr(lfoc_weights(su.stats).alpha, su.stats).gamma;
        const Real lfsc = exact_sinr(lfsc_weights(lfsc_intermediates(su.recv, su.real, su.est, su.noise)).alpha, su.stats).gamma;
        const Real lfcc = exact_sinr(lfcc_weights(su.recv.partition, LfccMode::uniform).alpha, su.stats).gamma;
        CHECK(lfsc <= opt * (1 + 1e-12));
        CHECK(lfcc <= opt * (1 + 1e-12));
    }
}
