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


#ifndef DBP_SINR_HPP
#define DBP_SINR_HPP

#include "dbp/receiver.hpp"

namespace dbp
{

// Conditional second-order statistics of the local estimates given Sigma_hat:
// m = D_r^H h_tilde_0 and M = D_r^H (H_tilde H_tilde^H + W + sigma^2 I) D_r, where H_tilde holds the
// posterior means of users 1..M only.
struct SinrStatistics
{
    Vector m;
    Matrix M;
};

SinrStatistics sinr_statistics(const LocalReceivers &recv, const ChannelRealization &real, const EstimationModel &est,
                               Real noise);

struct SinrResult
{
    Real gamma = 0;
    Real mse = 0;
    Real rate_bits = 0; // log2(1 + gamma)
};

// gamma = |alpha m|^2 / (alpha M alpha^H). Throws NumericError when the denominator vanishes.
SinrResult exact_sinr(const RowVector &alpha, const SinrStatistics &stats);
SinrResult exact_sinr(const RowVector &alpha, const LocalReceivers &recv, const ChannelRealization &real,
                      const EstimationModel &est, Real noise);

// alpha (M + m m^H) alpha^H - 2 Re(alpha m) + 1
Real conditional_mse(const RowVector &alpha, const SinrStatistics &stats);

// max over alpha of the ratio, m^H M^{-1} m.
Real optimal_sinr(const SinrStatistics &stats);

} // namespace dbp

#endif // DBP_SINR_HPP
