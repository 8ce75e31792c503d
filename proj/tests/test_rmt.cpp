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
#include "dbp/iid.hpp"
#include "dbp/rmt.hpp"

#include <boost/math/tools/roots.hpp>
#include <catch_amalgamated.hpp>

using namespace dbp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

// Bracketed root of f on [lo, hi] with toms748.
template <typename F>
Real root(F f, Real lo, Real hi)
{
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<Real>(52), iters);
    return (r.first + r.second) / 2;
}

Matrix scalar(Real x) { return Matrix::Constant(1, 1, x); }

RmtInputs iid_like_inputs(Index n, const std::vector<Real> &omega, Real shift, Real z)
{
    std::vector<Matrix> a, b;
    for (Real w : omega)
    {
        a.push_back(std::sqrt(w) * Matrix::Identity(n, n));
        b.push_back(a.back());
    }
    return make_rmt_inputs(Partition({n}), a, b, {shift * Matrix::Identity(n, n)}, {z});
}

struct Scenario
{
    SpatialModel model;
    EstimationModel est;
    ReceiverParams params;
    Real noise;
};

Scenario correlated(const std::vector<Index> &sizes, Index M, Real noise, Real s)
{
    Index n = 0;
    for (Index k : sizes)
        n += k;
    SpatialModel m = ula_spatial_model(n, M, Partition(sizes));
    EstimationModel est = build_estimation_model(m, s);
    ReceiverParams params = default_params(m, noise, s);
    return {std::move(m), std::move(est), std::move(params), noise};
}

} // namespace

TEST_CASE("scalar fixed point against a bracketing root finder")
{
    for (Real rho : {1e-3, 0.1, 1.0, 10.0})
    {
        const FixedPointSolution fp =
            solve_fixed_point(make_rmt_inputs(Partition({1}), {scalar(1)}, {scalar(1)}, {scalar(0)}, {-rho}));
        const Real ref = root([&](Real d) { return d - 1 / (rho + 1 / (1 + d)); }, 0, 1 / rho + 1);
        // The stopping rule bounds the last update; the error is that update amplified by 1 / (1 - L)
        // with L the local contraction factor, close to 1 for small rho.
        CHECK_THAT(fp.delta(0, 0), WithinRel(ref, 1e-9));
        CHECK(fp.residual <= 1e-12 * std::max(1.0, fp.delta(0, 0)));
    }
}

TEST_CASE("scaled-identity inputs reduce to one scalar equation")
{
    // Omega_j = w_j I: delta_j = w_j t with t = 1 / (shift - z + (1/n) sum_j w_j / (1 + w_j t)).
    const std::vector<Real> w{0.5, 1.0, 2.0, 4.0};
    const Index n = 6;
    const Real shift = 0.1, z = -0.05;
    const FixedPointSolution fp = solve_fixed_point(iid_like_inputs(n, w, shift, z));
    auto f = [&](Real t) {
        Real s = shift - z;
        for (Real wj : w)
            s += wj / (1 + wj * t) / Real(n);
        return t - 1 / s;
    };
    const Real t = root(f, 0, 1 / (shift - z));
    for (std::size_t j = 0; j < w.size(); ++j)
        CHECK_THAT(fp.delta(0, static_cast<Index>(j)), WithinRel(w[j] * t, 1e-11));
    CHECK((fp.theta[0] - t * Matrix::Identity(n, n)).norm() < 1e-11);
}

TEST_CASE("delta decreases when z moves away from zero")
{
    const Scenario sc = correlated({5, 7}, 4, 0.05, 0.05);
    RmtInputs in = make_rmt_inputs(sc.est, sc.params);
    const FixedPointSolution a = solve_fixed_point(in);
    for (Real &z : in.z)
        z *= 2;
    const FixedPointSolution b = solve_fixed_point(in);
    CHECK((b.delta.array() < a.delta.array()).all());
}

TEST_CASE("fixed point satisfies both equations")
{
    const Scenario sc = correlated({6, 10}, 5, 0.01, 0.01);
    const RmtInputs in = make_rmt_inputs(sc.est, sc.params);
    const FixedPointSolution fp = solve_fixed_point(in);
    const Partition &p = in.partition;
    for (Index k = 0; k < 2; ++k)
    {
        const Index nk = p.size(k);
        Matrix A = in.shift[static_cast<std::size_t>(k)];
        A.diagonal().array() -= in.z[static_cast<std::size_t>(k)];
        for (Index j = 0; j < 5; ++j)
            A += block(in.omega[static_cast<std::size_t>(j)], p, k, k) / (Real(nk) * (1 + fp.delta(k, j)));
        CHECK((A.inverse() - fp.theta[static_cast<std::size_t>(k)]).norm() < 1e-9 * A.inverse().norm());
        for (Index j = 0; j < 5; ++j)
        {
            const Real d = trace_product(block(in.omega[static_cast<std::size_t>(j)], p, k, k),
                                         fp.theta[static_cast<std::size_t>(k)])
                               .real() /
                           Real(nk);
            CHECK_THAT(fp.delta(k, j), WithinRel(d, 1e-10));
            CHECK(fp.delta(k, j) > 0);
        }
    }
}

TEST_CASE("input validation")
{
    CHECK_THROWS_AS(make_rmt_inputs(Partition({1}), {scalar(1)}, {scalar(1)}, {scalar(0)}, {0.1}), InvalidInput);
    CHECK_THROWS_AS(make_rmt_inputs(Partition({2}), {scalar(1)}, {scalar(1)}, {scalar(0)}, {-0.1}), InvalidInput);
    CHECK_THROWS_AS(solve_fixed_point(make_rmt_inputs(Partition({1}), {scalar(1)}, {scalar(1)}, {scalar(0)}, {-1.0}),
                                      FixedPointOptions{0, 10}),
                    InvalidInput);
    CHECK_THROWS_AS(solve_fixed_point(make_rmt_inputs(Partition({1}), {scalar(1)}, {scalar(1)}, {scalar(0)}, {-1e-4}),
                                      FixedPointOptions{1e-15, 2}),
                    NumericError);
}

TEST_CASE("trivial functional values")
{
    const Scenario sc = correlated({5, 7}, 4, 0.05, 0.05);
    const DeterministicEquivalents de(make_rmt_inputs(sc.est, sc.params));
    const Matrix &t0 = de.fixed_point().theta[0];
    CHECK(std::abs(de.digamma(0, Matrix::Zero(5, 5))) == 0);
    CHECK_THAT(de.digamma(0, t0.inverse()).real(), WithinAbs(5.0, 1e-10));
    CHECK(std::abs(de.phi(0, 1, Matrix::Ones(7, 5), Vector::Zero(4))) == 0);
    CHECK(std::abs(de.upsilon(0, 1, Matrix::Zero(7, 5), Matrix::Ones(5, 7))) == 0);
    CHECK_THROWS_AS(de.digamma(0, Matrix::Zero(7, 7)), InvalidInput);
    CHECK(de.max_spectral_radius() < 1);
}

TEST_CASE("variants coincide when B equals A, and pi vanishes with B = 0")
{
    const Partition p({4, 6});
    RngStream rng(3);
    std::vector<Matrix> a, zero;
    for (int j = 0; j < 3; ++j)
    {
        const Matrix G = sample_standard_complex_gaussian(10, 10, rng) / std::sqrt(10.0);
        a.push_back(G);
        zero.push_back(Matrix::Zero(10, 10));
    }
    const std::vector<Matrix> shift{Matrix::Zero(4, 4), Matrix::Zero(6, 6)};
    const DeterministicEquivalents same(make_rmt_inputs(p, a, a, shift, {-0.3, -0.3}));
    const DeterministicEquivalents none(make_rmt_inputs(p, a, zero, shift, {-0.3, -0.3}));
    const Matrix A10 = sample_standard_complex_gaussian(6, 4, rng);
    const Vector b = sample_standard_complex_gaussian(3, rng);
    CHECK(std::abs(same.phi(0, 1, A10, b, PiVariant::B) - same.phi(0, 1, A10, b, PiVariant::A)) < 1e-13);
    CHECK(std::abs(same.pi(0, 1, A10, PiVariant::B) - same.pi(0, 1, A10, PiVariant::A)) < 1e-12);
    CHECK(std::abs(none.pi(0, 1, A10, PiVariant::B)) < 1e-14);
    CHECK(std::abs(none.pi(1, 1, Matrix::Identity(6, 6), PiVariant::B)) < 1e-14);
}

TEST_CASE("receiver filter equals the scaled resolvent")
{
    const Scenario sc = correlated({5, 9}, 4, 0.05, 0.05);
    RngStream rng(6);
    const ChannelRealization r = sample_estimated_channel(sc.est, rng);
    const LocalReceivers recv = build_local_receivers(r.estimated, sc.est.partition(), sc.params);
    const Partition &p = sc.est.partition();
    for (Index k = 0; k < 2; ++k)
    {
        const Index nk = p.size(k);
        const Matrix Xk = r.estimated.middleRows(p.offset(k), nk) / std::sqrt(Real(nk));
        Matrix Q = Xk * Xk.adjoint() + sc.params.shift[static_cast<std::size_t>(k)];
        Q.diagonal().array() += sc.params.rho[static_cast<std::size_t>(k)];
        const Vector bridge = Q.inverse() * r.estimated.col(0).segment(p.offset(k), nk) / Real(nk);
        CHECK((recv.filters[static_cast<std::size_t>(k)] - bridge).norm() < 1e-12 * bridge.norm());
    }
}

TEST_CASE("single cluster, perfect CSI, i.i.d.: classical large-system MMSE SINR")
{
    const Index N = 40, M = 16;
    const Real noise = 0.1;
    const SpatialModel m = iid_spatial_model(N, M, Partition({N}));
    const EstimationModel est = build_estimation_model(m, 0);
    const RmtSolution sol = deterministic_sinr(est, default_params(m, noise, 0), noise);
    // gamma = N / (sigma^2 + M / (1 + gamma))
    const Real ref = root([&](Real g) { return g - Real(N) / (noise + Real(M) / (1 + g)); }, 0, Real(N) / noise);
    CHECK_THAT(sol.gamma_lfoc, WithinRel(ref, 1e-10));
    CHECK_THAT(sol.gamma_lfsc, WithinRel(ref, 1e-10));
    CHECK_THAT(lfcc_sinr(sol, RowVector::Ones(1)), WithinRel(ref, 1e-10));
}

TEST_CASE("single cluster: all schemes coincide on a correlated channel")
{
    const Scenario sc = correlated({16}, 6, 0.02, 0.05);
    const RmtSolution sol = deterministic_sinr(sc.est, sc.params, sc.noise, RowVector::Ones(1));
    CHECK_THAT(sol.gamma_lfsc, WithinRel(sol.gamma_lfoc, 1e-10));
    CHECK_THAT(*sol.gamma_lfcc, WithinRel(sol.gamma_lfoc, 1e-10));
}

TEST_CASE("structure of the solution")
{
    const Scenario sc = correlated({4, 6, 8}, 6, 0.01, 0.02);
    const RmtSolution sol = deterministic_sinr(sc.est, sc.params, sc.noise);
    CHECK(sol.diagnostics.hermitian_defect < 1e-10);
    CHECK(sol.diagnostics.max_spectral_radius < 1);
    CHECK(is_hermitian(sol.delta));
    CHECK(is_hermitian(sol.delta_I));
    for (Index k = 0; k < 3; ++k)
        CHECK_THAT(sol.J(k, k).real(), WithinRel(1 / (1 + sol.v[k]), 1e-14));
    CHECK(sol.gamma_lfoc >= sol.gamma_lfsc * (1 - 1e-12));
    RngStream rng(4);
    for (int t = 0; t < 20; ++t)
    {
        const RowVector a = sample_standard_complex_gaussian(3, rng).transpose();
        CHECK(lfcc_sinr(sol, a) <= sol.gamma_lfoc * (1 + 1e-12));
    }
    const Real direct = (sol.v.cast<Complex>().adjoint() * sol.delta.inverse() * sol.v.cast<Complex>())(0).real();
    CHECK_THAT(sol.gamma_lfoc, WithinRel(direct, 1e-10));
    const nlohmann::json j = rmt_solution_to_json(sol);
    CHECK(j.at("v").size() == 3);
    CHECK(j.at("gamma_lfoc").get<Real>() == sol.gamma_lfoc);
    CHECK(j.at("diagnostics").contains("fixed_point_iterations"));
}

TEST_CASE("perfect CSI: LFSC equals LFOC")
{
    const Scenario sc = correlated({5, 9}, 4, 0.01, 0.0);
    const RmtSolution sol = deterministic_sinr(sc.est, sc.params, sc.noise);
    CHECK((sol.delta - sol.delta_I).norm() < 1e-9 * sol.delta.norm());
    CHECK_THAT(sol.gamma_lfsc, WithinRel(sol.gamma_lfoc, 1e-9));
}

TEST_CASE("block-diagonal correlation: matched weights achieve the sum of cluster SINRs")
{
    const SpatialModel m = cluster_decorrelated(ula_spatial_model(14, 4, Partition({5, 9})));
    const EstimationModel est = build_estimation_model(m, 0.05);
    const RmtSolution sol = deterministic_sinr(est, default_params(m, 0.05, 0.05), 0.05);
    const Real sum = sol.v[0] * sol.v[0] / sol.delta(0, 0).real() + sol.v[1] * sol.v[1] / sol.delta(1, 1).real();
    CHECK_THAT(sol.gamma_lfoc, WithinRel(sum, 1e-9));
    CHECK_THAT(lfcc_sinr(sol, lfcc_matched_weights(sol).alpha), WithinRel(sol.gamma_lfoc, 1e-9));
    CHECK_THAT(sol.gamma_lfsc, WithinRel(sol.gamma_lfoc, 1e-9));
}

TEST_CASE("empty clusters are excluded")
{
    const SpatialModel m = iid_spatial_model(10, 4, Partition({0, 10}));
    const EstimationModel est = build_estimation_model(m, 0.1);
    const RmtSolution sol = deterministic_sinr(est, default_params(m, 0.1, 0.1), 0.1);
    const SpatialModel one = iid_spatial_model(10, 4, Partition({10}));
    const RmtSolution ref = deterministic_sinr(build_estimation_model(one, 0.1), default_params(one, 0.1, 0.1), 0.1);
    CHECK(sol.v[0] == 0);
    CHECK_THAT(sol.gamma_lfoc, WithinRel(ref.gamma_lfoc, 1e-12));
}
