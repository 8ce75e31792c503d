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

#include "dbp/iid.hpp"
#include "dbp/rmt.hpp"

#include <boost/math/tools/roots.hpp>
#include <catch_amalgamated.hpp>

using namespace dbp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

Real gamma_at(IidScenario sc, const std::vector<Real> &rho)
{
    sc.rho = rho;
    return iid_sinr(sc, Scheme::lfoc);
}

} // namespace

TEST_CASE("delta satisfies its defining equation")
{
    for (Real s : {0.0, 1e-3, 0.5})
        for (Real rho : {1e-5, 1e-2, 1.0})
        {
            IidScenario sc = make_iid_scenario(10, {4, 25}, 1e-2, s);
            sc.rho = {rho, rho / 3};
            for (Index k = 0; k < 2; ++k)
            {
                const Real c = sc.c(k);
                const Real A = sc.rho[static_cast<std::size_t>(k)] * (s + 1) + Real(11) / (10 * c) * s;
                const Real d = iid_delta(k, sc);
                CHECK(d > 0);
                CHECK_THAT(d, WithinRel(1 / (A + 1 / (c * (1 + d))), 1e-12));
            }
        }
}

TEST_CASE("delta decreases in rho")
{
    IidScenario sc = make_iid_scenario(8, {12}, 1e-2, 0.1);
    Real prev = 1e300;
    for (Real rho = 1e-6; rho < 10; rho *= 3)
    {
        sc.rho = {rho};
        const Real d = iid_delta(0, sc);
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("at the optimal regularizer the SINR is the sum of the deltas")
{
    const IidScenario sc = make_iid_scenario(12, {10, 22}, 1e-2, 0.1);
    CHECK_THAT(iid_varpi(0, sc), WithinAbs(1.0, 1e-15));
    CHECK_THAT(iid_varpi(1, sc), WithinAbs(1.0, 1e-15));
    CHECK_THAT(iid_sinr(sc), WithinRel(iid_delta(0, sc) + iid_delta(1, sc), 1e-14));
    CHECK(iid_sinr(sc, Scheme::lfsc) == iid_sinr(sc, Scheme::lfoc));
}

TEST_CASE("single cluster with perfect CSI matches the classical fixed point")
{
    const Index N = 50, M = 20;
    const Real noise = 0.05;
    const IidScenario sc = make_iid_scenario(M, {Real(N)}, noise, 0);
    boost::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(
        [&](Real g) { return g - Real(N) / (noise + Real(M) / (1 + g)); }, 0.0, Real(N) / noise,
        boost::math::tools::eps_tolerance<Real>(52), it);
    CHECK_THAT(iid_sinr(sc), WithinRel((r.first + r.second) / 2, 1e-12));
}

TEST_CASE("closed form matches the general solver")
{
    for (auto sizes : {std::vector<Index>{8, 16}, std::vector<Index>{5, 5, 14}})
        for (Real s : {0.0, 0.01, 0.3})
        {
            Index n = 0;
            for (Index k : sizes)
                n += k;
            const Index M = 10;
            const Real noise = 0.02;
            const Partition p(sizes);
            const SpatialModel m = iid_spatial_model(n, M, p);
            // Off-optimal regularizers exercise the varpi bracket.
            std::vector<Real> rho;
            for (Index k : sizes)
                rho.push_back(3 * noise / Real(k));
            RowVector alpha = RowVector::LinSpaced(static_cast<Index>(sizes.size()), 1, 2).cast<Complex>();
            const RmtSolution sol = deterministic_sinr(build_estimation_model(m, s), params_with_rho(m, s, rho), noise, alpha);
            IidScenario sc = make_iid_scenario(M, std::vector<Real>(sizes.begin(), sizes.end()), noise, s);
            sc.rho = rho;
            sc.alpha = alpha;
            CHECK_THAT(sol.gamma_lfoc, WithinRel(iid_sinr(sc, Scheme::lfoc), 1e-8));
            CHECK_THAT(sol.gamma_lfsc, WithinRel(iid_sinr(sc, Scheme::lfsc), 1e-8));
            CHECK_THAT(*sol.gamma_lfcc, WithinRel(iid_sinr(sc, Scheme::custom), 1e-8));
            for (Index k = 0; k < p.clusters(); ++k)
                CHECK_THAT(sol.v[k], WithinRel(iid_delta(k, sc), 1e-9));
        }
}

TEST_CASE("optimal regularizer")
{
    const IidScenario sc = make_iid_scenario(40, {36, 36}, 1e-3, 1e-3);
    const std::vector<Real> opt = optimal_rho(sc);
    CHECK_THAT(opt[0], WithinRel(1e-3 / 36, 1e-14));
    CHECK_THAT(linear_to_db(opt[0] * 36), WithinAbs(-30.0, 1e-12));
    const Real best = gamma_at(sc, opt);
    for (Real f : {0.9, 1.1})
    {
        const Real g = gamma_at(sc, {opt[0] * f, opt[1] * f});
        CHECK(g <= best);
        CHECK((best - g) / best < 1e-3);
    }
    for (Real e = -6; e <= 0; e += 0.25)
        CHECK(gamma_at(sc, {std::pow(10.0, e), opt[1]}) <= best * (1 + 1e-14));
}

TEST_CASE("curvature term stays positive")
{
    for (Real s : {0.0, 0.1, 1.0})
        for (Real c : {0.1, 1.0, 3.0})
        {
            IidScenario sc = make_iid_scenario(20, {20 * c}, 1e-2, s);
            const Real d = iid_delta(0, sc);
            CHECK(1 - d * d / (c * (1 + d) * (1 + d)) > 0);
        }
}

TEST_CASE("partition bounds order equal split, given split and single cluster")
{
    const Real noise = 1e-3;
    const IidScenario sc = make_iid_scenario(40, {90, 30}, noise, 1e-3);
    const PartitionBounds b = partition_bounds(sc, noise / 40);
    CHECK(b.max_valid);
    CHECK(b.min_valid);
    CHECK(b.gamma_min <= b.gamma_current);
    CHECK(b.gamma_current <= b.gamma_max);
    const IidScenario eq = make_iid_scenario(40, {60, 60}, noise, 1e-3);
    CHECK_THAT(partition_bounds(eq, noise / 40).gamma_current, WithinRel(b.gamma_min, 1e-14));

    const IidScenario one = make_iid_scenario(40, {120}, noise, 1e-3);
    const PartitionBounds b1 = partition_bounds(one, noise / 40);
    CHECK_THAT(b1.gamma_min, WithinRel(b1.gamma_max, 1e-14));
    CHECK_THAT(b1.gamma_current, WithinRel(b1.gamma_max, 1e-14));
}

TEST_CASE("random partitions lie between the bounds")
{
    RngStream rng(17);
    std::uniform_int_distribution<int> cut(1, 119);
    for (int t = 0; t < 200; ++t)
    {
        std::vector<int> cuts{0, 120};
        while (cuts.size() < 5)
        {
            const int c = cut(rng.engine());
            if (std::find(cuts.begin(), cuts.end(), c) == cuts.end())
                cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        std::vector<Real> sizes;
        for (std::size_t i = 1; i < cuts.size(); ++i)
            sizes.push_back(Real(cuts[i] - cuts[i - 1]));
        const IidScenario sc = make_iid_scenario(40, sizes, 1e-2, 1e-2);
        const PartitionBounds b = partition_bounds(sc, 1e-2 / 40);
        REQUIRE(b.min_valid);
        CHECK(b.gamma_current >= b.gamma_min * (1 - 1e-13));
        CHECK(b.gamma_current <= b.gamma_max * (1 + 1e-13));
    }
}

TEST_CASE("invalid range is flagged, not asserted")
{
    const IidScenario sc = make_iid_scenario(40, {60, 60}, 1e-2, 1e-2);
    const PartitionBounds b = partition_bounds(sc, 1e-2 / 40 / 10);
    CHECK_FALSE(b.max_valid);
    CHECK_FALSE(b.min_valid);
}

TEST_CASE("cluster-count curve and lower bound")
{
    CHECK_THAT(iid_lower_bound(120, 40, 1e-3, 1e-3), WithinAbs(120 / (40.001 * 1.001 + 0.001), 1e-12));
    CHECK_THAT(iid_lower_bound(120, 40, 1e-3, 1e-3), WithinAbs(2.996, 1e-3));
    std::vector<Index> ks;
    for (Index k = 1; k <= 120; ++k)
        ks.push_back(k);
    const auto c = cluster_count_curve(120, 40, 1e-3, 1e-3, 1e-3 / 40, ks);
    for (std::size_t i = 1; i < c.size(); ++i)
        CHECK(c[i].gamma <= c[i - 1].gamma);
    CHECK(c.back().gamma > c.back().bound);
    CHECK_THROWS_AS(cluster_count_curve(12, 4, 1e-3, 1e-3, 1e-3, {13}), InvalidInput);
}

TEST_CASE("large system: many singleton clusters approach N/M")
{
    const Index N = 400, M = 100;
    const auto c = cluster_count_curve(N, M, 1e-6, 1e-6, 1e-6 / M, {N});
    const Real ratio = c.front().gamma / (Real(N) / Real(M));
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);
}

TEST_CASE("empty cluster contributes nothing")
{
    IidScenario sc = make_iid_scenario(10, {0, 20}, 1e-2, 1e-2);
    sc.rho[0] = 1;
    CHECK(iid_delta(0, sc) == 0);
    CHECK(iid_varpi(0, sc) == 1);
    const IidScenario one = make_iid_scenario(10, {20}, 1e-2, 1e-2);
    CHECK_THAT(iid_sinr(sc), WithinRel(iid_sinr(one), 1e-14));
}
