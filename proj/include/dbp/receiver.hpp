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


#ifndef DBP_RECEIVER_HPP
#define DBP_RECEIVER_HPP

#include "dbp/estimation.hpp"

#include <vector>

namespace dbp
{

enum class ReceiverPolicy
{
    mmse_default,
    custom
};

// Per-cluster regularizer rho_k > 0 and shift Z_k (N_k x N_k Hermitian PSD).
struct ReceiverParams
{
    std::vector<Real> rho;
    std::vector<Matrix> shift;
    ReceiverPolicy policy = ReceiverPolicy::custom;

    Index clusters() const { return static_cast<Index>(rho.size()); }
    // Throws InvalidInput unless sizes match the partition, every rho_k > 0 and every Z_k is Hermitian.
    void check(const Partition &p) const;
};

// rho_k = sigma^2 / N_k and Z_k = (sigma_t^2 / N_k) sum_j [R_j]_{[k,k]} ([R_j]_{[k,k]} + sigma_t^2 I)^{-1}.
ReceiverParams default_params(const SpatialModel &model, Real noise, Real training_noise);

// Given regularizers with Z_k from the MMSE default.
ReceiverParams params_with_rho(const SpatialModel &model, Real training_noise, std::vector<Real> rho);

// r_k = (S S^H + N_k Z_k + N_k rho_k I)^{-1} h_hat_{0k}, where S = Sigma_hat_k (N_k x (M + 1)).
Vector local_lmmse_filter(const Matrix &estimated_k, const ReceiverParams &params, Index k);

struct LocalReceivers
{
    Partition partition;
    std::vector<Vector> filters;
    // N x K, column k holds r_k on the rows of cluster k.
    Matrix D_r;
};

LocalReceivers build_local_receivers(const Matrix &estimated, const Partition &partition, const ReceiverParams &params);

} // namespace dbp

#endif // DBP_RECEIVER_HPP
