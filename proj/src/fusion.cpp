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

#include <array>
#include <utility>

namespace dbp
{

namespace
{

constexpr std::array<std::pair<Scheme, const char *>, 6> scheme_names{{
    {Scheme::lfoc, "lfoc"},
    {Scheme::lfsc, "lfsc"},
    {Scheme::lfcc_uniform, "lfcc_uniform"},
    {Scheme::lfcc_proportional, "lfcc_proportional"},
    {Scheme::lfcc_matched, "lfcc_matched"},
    {Scheme::custom, "custom"},
}};

} // namespace

std::string scheme_name(Scheme s)
{
    for (const auto &[scheme, name] : scheme_names)
        if (scheme == s)
            return name;
    return "unknown";
}

Scheme parse_scheme(const std::string &name)
{
    for (const auto &[scheme, n] : scheme_names)
        if (name == n)
            return scheme;
    throw InvalidInput("unknown fusion scheme \"" + name + "\"");
}

FusionWeights lfoc_weights(const SinrStatistics &stats)
{
    const Matrix total = stats.M + stats.m * stats.m.adjoint();
    Vector x;
    try
    {
        x = solve_hpd(total, stats.m);
    }
    catch (const NumericError &)
    {
        throw NumericError("lfoc_weights: fusion Gram matrix is singular");
    }
    return {x.adjoint(), Scheme::lfoc};
}

FusionWeights lfoc_weights(const LocalReceivers &recv, const ChannelRealization &real, const EstimationModel &est,
                           Real noise)
{
    return lfoc_weights(sinr_statistics(recv, real, est, noise));
}

std::vector<LfscIntermediates> lfsc_intermediates(const LocalReceivers &recv, const ChannelRealization &real,
                                                  const EstimationModel &est, Real noise)
{
    const Partition &p = recv.partition;
    std::vector<LfscIntermediates> out;
    out.reserve(static_cast<std::size_t>(p.clusters()));
    for (Index k = 0; k < p.clusters(); ++k)
    {
        const Vector &r = recv.filters[static_cast<std::size_t>(k)];
        const Index nk = p.size(k);
        LfscIntermediates in;
        if (nk == 0)
        {
            in.r_sigma = RowVector::Zero(real.estimated.cols());
            out.push_back(std::move(in));
            continue;
        }
        const auto Sk = cluster_rows(real.estimated, p, k);
        in.r_h0 = r.dot(Sk.col(0));
        in.r_sigma = r.adjoint() * Sk;
        Matrix noise_kk = block(est.DW(), p, k, k);
        noise_kk.diagonal().array() += noise;
        in.r_noise_r = r.dot(noise_kk * r).real();
        out.push_back(std::move(in));
    }
    return out;
}

Matrix lfsc_gram(const std::vector<LfscIntermediates> &inter)
{
    const Index K = static_cast<Index>(inter.size());
    if (K == 0)
        throw InvalidInput("lfsc_gram: no clusters");
    const Index users = inter.front().r_sigma.size();
    Matrix S(K, users);
    for (Index k = 0; k < K; ++k)
    {
        if (inter[static_cast<std::size_t>(k)].r_sigma.size() != users)
            throw InvalidInput("lfsc_gram: inconsistent user counts across clusters");
        S.row(k) = inter[static_cast<std::size_t>(k)].r_sigma;
    }
    Matrix G = S * S.adjoint();
    for (Index k = 0; k < K; ++k)
        G(k, k) += inter[static_cast<std::size_t>(k)].r_noise_r;
    return hermitian_part(G);
}

FusionWeights lfsc_weights(const std::vector<LfscIntermediates> &inter)
{
    const Matrix G = lfsc_gram(inter);
    Vector m(static_cast<Index>(inter.size()));
    for (std::size_t k = 0; k < inter.size(); ++k)
        m[static_cast<Index>(k)] = inter[k].r_h0;
    Vector x;
    try
    {
        x = solve_hpd(G, m);
    }
    catch (const NumericError &)
    {
        throw NumericError("lfsc_weights: assembled Gram matrix is singular");
    }
    return {x.adjoint(), Scheme::lfsc};
}

FusionWeights lfcc_weights(const Partition &p, LfccMode mode)
{
    const Index K = p.clusters();
    RowVector a(K);
    for (Index k = 0; k < K; ++k)
        a[k] = mode == LfccMode::uniform ? Real(1) / Real(K) : Real(p.size(k)) / Real(p.antennas());
    return {a, mode == LfccMode::uniform ? Scheme::lfcc_uniform : Scheme::lfcc_proportional};
}

FusionWeights lfcc_matched_weights(const RealVector &v, const Matrix &delta)
{
    if (delta.rows() != v.size() || delta.cols() != v.size())
        throw InvalidInput("lfcc_matched_weights: v and Delta sizes differ");
    RowVector a(v.size());
    for (Index k = 0; k < v.size(); ++k)
    {
        const Real d = delta(k, k).real();
        a[k] = d > 0 ? (1 + v[k]) * v[k] / d : 0;
    }
    return {a, Scheme::lfcc_matched};
}

Complex fuse(const FusionWeights &w, const Vector &local_estimates)
{
    if (w.alpha.size() != local_estimates.size())
        throw InvalidInput("fuse: " + std::to_string(w.alpha.size()) + " weights for " +
                           std::to_string(local_estimates.size()) + " local estimates");
    return (w.alpha * local_estimates)(0);
}

} // namespace dbp
