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


#ifndef DBP_FUSION_HPP
#define DBP_FUSION_HPP

#include "dbp/sinr.hpp"

#include <string>
#include <vector>

namespace dbp
{

enum class Scheme
{
    lfoc,
    lfsc,
    lfcc_uniform,
    lfcc_proportional,
    lfcc_matched,
    custom
};

std::string scheme_name(Scheme s);
// Throws InvalidInput for unknown names.
Scheme parse_scheme(const std::string &name);

struct FusionWeights
{
    RowVector alpha;
    Scheme scheme = Scheme::custom;
};

// alpha = h_tilde_0^H D_r (D_r^H (Sigma_tilde Sigma_tilde^H + W + sigma^2 I) D_r)^{-1}, i.e. m^H (M + m m^H)^{-1}.
FusionWeights lfoc_weights(const SinrStatistics &stats);
FusionWeights lfoc_weights(const LocalReceivers &recv, const ChannelRealization &real, const EstimationModel &est,
                           Real noise);

// What cluster k sends to the central unit besides its local estimate.
struct LfscIntermediates
{
    Complex r_h0 = 0;  // r_k^H h_hat_{0k}
    RowVector r_sigma; // r_k^H Sigma_hat_k, length M + 1
    Real r_noise_r = 0; // r_k^H [D_W + sigma^2 I]_{[k,k]} r_k
};

std::vector<LfscIntermediates> lfsc_intermediates(const LocalReceivers &recv, const ChannelRealization &real,
                                                  const EstimationModel &est, Real noise);

// Assembles M_hat and m_hat from the intermediates and returns alpha = m_hat^H M_hat^{-1}.
FusionWeights lfsc_weights(const std::vector<LfscIntermediates> &inter);
Matrix lfsc_gram(const std::vector<LfscIntermediates> &inter);

enum class LfccMode
{
    uniform,
    proportional
};

// alpha_k = 1/K or N_k/N.
FusionWeights lfcc_weights(const Partition &p, LfccMode mode);

// alpha_k = (1 + v_k) v_k / Delta_kk, from the deterministic equivalents. Clusters with Delta_kk = 0 get weight 0.
FusionWeights lfcc_matched_weights(const RealVector &v, const Matrix &delta);

// sum_k alpha_k x_k
Complex fuse(const FusionWeights &w, const Vector &local_estimates);

} // namespace dbp

#endif // DBP_FUSION_HPP
