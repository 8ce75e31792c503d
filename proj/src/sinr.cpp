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

#include "dbp/sinr.hpp"

namespace dbp
{

SinrStatistics sinr_statistics(const LocalReceivers &recv, const ChannelRealization &real, const EstimationModel &est,
                               Real noise)
{
    const Index n = est.antennas();
    if (recv.D_r.rows() != n || real.posterior_mean.rows() != n)
        throw InvalidInput("sinr_statistics: dimension mismatch");
    const Matrix &Dr = recv.D_r;
    SinrStatistics s;
    s.m = Dr.adjoint() * real.posterior_mean.col(0);
    const Matrix G = Dr.adjoint() * real.posterior_mean.rightCols(est.interferers());
    s.M = G * G.adjoint() + Dr.adjoint() * est.W() * Dr + noise * (Dr.adjoint() * Dr);
    s.M = hermitian_part(s.M);
    return s;
}

SinrResult exact_sinr(const RowVector &alpha, const SinrStatistics &stats)
{
    if (alpha.size() != stats.m.size())
        throw InvalidInput("exact_sinr: weight vector has the wrong length");
    const Real den = (alpha * stats.M * alpha.adjoint())(0, 0).real();
    if (!(den > 0))
        throw NumericError("exact_sinr: SINR undefined (zero interference-plus-noise power for these weights)");
    SinrResult r;
    r.gamma = std::norm((alpha * stats.m)(0)) / den;
    r.mse = conditional_mse(alpha, stats);
    r.rate_bits = std::log2(1 + r.gamma);
    return r;
}

SinrResult exact_sinr(const RowVector &alpha, const LocalReceivers &recv, const ChannelRealization &real,
                      const EstimationModel &est, Real noise)
{
    return exact_sinr(alpha, sinr_statistics(recv, real, est, noise));
}

Real conditional_mse(const RowVector &alpha, const SinrStatistics &stats)
{
    if (alpha.size() != stats.m.size())
        throw InvalidInput("conditional_mse: weight vector has the wrong length");
    const Complex am = (alpha * stats.m)(0);
    const Real quad = (alpha * stats.M * alpha.adjoint())(0, 0).real();
    return quad + std::norm(am) - 2 * am.real() + 1;
}

Real optimal_sinr(const SinrStatistics &stats)
{
    return stats.m.dot(solve_hpd(stats.M, stats.m)).real();
}

} // namespace dbp
