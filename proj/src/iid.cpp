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

#include <numeric>

namespace dbp
{

Real IidScenario::antennas() const { return std::accumulate(sizes.begin(), sizes.end(), Real(0)); }

void IidScenario::check() const
{
    if (interferers < 1)
        throw InvalidInput("IidScenario: need at least one interferer");
    if (sizes.empty() || rho.size() != sizes.size())
        throw InvalidInput("IidScenario: need one size and one rho per cluster");
    if (!(noise >= 0) || !(training_noise >= 0))
        throw InvalidInput("IidScenario: noise powers must be non-negative");
    for (std::size_t k = 0; k < sizes.size(); ++k)
    {
        if (!(sizes[k] >= 0))
            throw InvalidInput("IidScenario: cluster sizes must be non-negative");
        if (!(rho[k] > 0))
            throw InvalidInput("IidScenario: rho_k must be positive");
    }
    if (!(antennas() > 0))
        throw InvalidInput("IidScenario: at least one antenna is required");
}

IidScenario make_iid_scenario(Index interferers, std::vector<Real> sizes, Real noise, Real training_noise)
{
    IidScenario sc;
    sc.interferers = interferers;
    sc.sizes = std::move(sizes);
    sc.noise = noise;
    sc.training_noise = training_noise;
    sc.rho = optimal_rho(sc);
    sc.check();
    return sc;
}

Real iid_delta(Index k, const IidScenario &sc)
{
    const Real c = sc.c(k);
    if (c == 0)
        return 0;
    const Real s = sc.training_noise;
    const Real m = Real(sc.interferers);
    const Real A = sc.rho.at(static_cast<std::size_t>(k)) * (s + 1) + (m + 1) * s / (m * c);
    const Real b = A + 1 / c - 1;
    const Real root = std::sqrt(b * b + 4 * A);
    // Both forms are the same root; pick the one without cancellation.
    return b > 0 ? 2 / (b + root) : (root - b) / (2 * A);
}

Real iid_varpi(Index k, const IidScenario &sc)
{
    const Real c = sc.c(k);
    if (c == 0)
        return 1;
    const Real d = iid_delta(k, sc);
    const Real s = sc.training_noise;
    const Real m = Real(sc.interferers);
    const Real denom = 1 - d * d / (c * (1 + d) * (1 + d));
    return 1 + (sc.noise / (m * c) - sc.rho.at(static_cast<std::size_t>(k))) * (s + 1) * d / denom;
}

Real iid_sinr(const IidScenario &sc, Scheme scheme)
{
    const Index K = sc.clusters();
    RealVector d(K), w(K);
    for (Index k = 0; k < K; ++k)
    {
        d[k] = iid_delta(k, sc);
        w[k] = iid_varpi(k, sc);
    }
    if (scheme == Scheme::lfoc || scheme == Scheme::lfsc)
    {
        Real g = 0;
        for (Index k = 0; k < K; ++k)
            if (d[k] > 0)
                g += d[k] / w[k];
        return g;
    }
    RowVector alpha(K);
    for (Index k = 0; k < K; ++k)
    {
        switch (scheme)
        {
        case Scheme::lfcc_uniform:
            alpha[k] = 1 / Real(K);
            break;
        case Scheme::lfcc_proportional:
            alpha[k] = sc.sizes[static_cast<std::size_t>(k)] / sc.antennas();
            break;
        case Scheme::lfcc_matched:
            alpha[k] = d[k] > 0 ? (1 + d[k]) / w[k] : 0;
            break;
        default:
            if (sc.alpha.size() != K)
                throw InvalidInput("iid_sinr: custom weights need one entry per cluster");
            alpha[k] = sc.alpha[k];
        }
    }
    Complex num = 0;
    Real den = 0;
    for (Index k = 0; k < K; ++k)
    {
        if (d[k] == 0)
            continue;
        num += alpha[k] * d[k] / (1 + d[k]);
        den += std::norm(alpha[k]) * d[k] * w[k] / ((1 + d[k]) * (1 + d[k]));
    }
    if (!(den > 0))
        throw NumericError("iid_sinr: SINR undefined for these weights");
    return std::norm(num) / den;
}

std::vector<Real> optimal_rho(const IidScenario &sc)
{
    std::vector<Real> rho;
    for (Real n : sc.sizes)
        rho.push_back(n > 0 ? sc.noise / n : sc.noise);
    return rho;
}

bool partition_bound_range(const IidScenario &sc, Real a, bool with_min)
{
    const Real m = Real(sc.interferers);
    const Real s = sc.training_noise;
    if (!(sc.noise / m <= a))
        return false;
    return !with_min || a <= 2 * sc.noise / m + (m + 1) * s / (m * (s + 1));
}

namespace
{

Real sinr_with_a(IidScenario sc, const std::vector<Real> &sizes, Real a)
{
    sc.sizes = sizes;
    sc.rho.clear();
    for (std::size_t k = 0; k < sizes.size(); ++k)
        sc.rho.push_back(sizes[k] > 0 ? a * Real(sc.interferers) / sizes[k] : a);
    return iid_sinr(sc, Scheme::lfoc);
}

} // namespace

PartitionBounds partition_bounds(const IidScenario &sc, Real a)
{
    sc.check();
    if (!(a > 0))
        throw InvalidInput("partition_bounds: a must be positive");
    const Index K = sc.clusters();
    const Real n = sc.antennas();
    PartitionBounds b;
    b.gamma_min = sinr_with_a(sc, std::vector<Real>(static_cast<std::size_t>(K), n / Real(K)), a);
    std::vector<Real> single(static_cast<std::size_t>(K), 0);
    single[0] = n;
    b.gamma_max = sinr_with_a(sc, single, a);
    b.gamma_current = sinr_with_a(sc, sc.sizes, a);
    b.max_valid = partition_bound_range(sc, a, false);
    b.min_valid = partition_bound_range(sc, a, true);
    return b;
}

Real iid_lower_bound(Real antennas, Index interferers, Real noise, Real training_noise)
{
    return antennas / ((noise + Real(interferers)) * (training_noise + 1) + training_noise);
}

std::vector<ClusterCountPoint> cluster_count_curve(Index antennas, Index interferers, Real noise, Real training_noise,
                                                   Real a, const std::vector<Index> &cluster_counts)
{
    IidScenario base;
    base.interferers = interferers;
    base.noise = noise;
    base.training_noise = training_noise;
    std::vector<ClusterCountPoint> out;
    const Real bound = iid_lower_bound(Real(antennas), interferers, noise, training_noise);
    for (Index K : cluster_counts)
    {
        if (K < 1 || K > antennas)
            throw InvalidInput("cluster_count_curve: K must lie in [1, N]");
        const std::vector<Real> sizes(static_cast<std::size_t>(K), Real(antennas) / Real(K));
        out.push_back({K, sinr_with_a(base, sizes, a), bound});
    }
    return out;
}

} // namespace dbp
