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

#include "dbp/receiver.hpp"

namespace dbp
{

void ReceiverParams::check(const Partition &p) const
{
    if (clusters() != p.clusters() || static_cast<Index>(shift.size()) != p.clusters())
        throw InvalidInput("ReceiverParams: expected one rho and one Z per cluster (" + std::to_string(p.clusters()) + ")");
    for (Index k = 0; k < p.clusters(); ++k)
    {
        const auto i = static_cast<std::size_t>(k);
        if (!(rho[i] > 0) || !std::isfinite(rho[i]))
            throw InvalidInput("ReceiverParams: rho_" + std::to_string(k) + " must be positive and finite");
        if (shift[i].rows() != p.size(k) || shift[i].cols() != p.size(k))
            throw InvalidInput("ReceiverParams: Z_" + std::to_string(k) + " has the wrong size");
        if (p.size(k) > 0 && !is_hermitian(shift[i], 1e-10))
            throw InvalidInput("ReceiverParams: Z_" + std::to_string(k) + " is not Hermitian");
    }
}

namespace
{

std::vector<Matrix> default_shift(const SpatialModel &model, Real training_noise)
{
    const Partition &p = model.partition();
    std::vector<Matrix> shift;
    for (Index k = 0; k < p.clusters(); ++k)
    {
        const Index nk = p.size(k);
        Matrix Z = Matrix::Zero(nk, nk);
        if (nk > 0 && training_noise > 0)
        {
            const Matrix I = Matrix::Identity(nk, nk);
            for (Index j = 0; j < model.users(); ++j)
            {
                const Matrix Rkk = block(model.correlation(j), p, k, k);
                Z += solve_hpd(Rkk + training_noise * I, Rkk);
            }
            Z = hermitian_part(Z) * (training_noise / Real(nk));
        }
        shift.push_back(std::move(Z));
    }
    return shift;
}

} // namespace

ReceiverParams default_params(const SpatialModel &model, Real noise, Real training_noise)
{
    if (!(noise > 0))
        throw InvalidInput("default_params: noise power must be positive");
    if (!(training_noise >= 0))
        throw InvalidInput("default_params: training noise power must be non-negative");
    const Partition &p = model.partition();
    ReceiverParams params;
    for (Index k = 0; k < p.clusters(); ++k)
        params.rho.push_back(p.size(k) > 0 ? noise / Real(p.size(k)) : noise);
    params.shift = default_shift(model, training_noise);
    params.policy = ReceiverPolicy::mmse_default;
    return params;
}

ReceiverParams params_with_rho(const SpatialModel &model, Real training_noise, std::vector<Real> rho)
{
    ReceiverParams params;
    params.rho = std::move(rho);
    params.shift = default_shift(model, training_noise);
    params.policy = ReceiverPolicy::custom;
    params.check(model.partition());
    return params;
}

Vector local_lmmse_filter(const Matrix &estimated_k, const ReceiverParams &params, Index k)
{
    const Index nk = estimated_k.rows();
    if (nk == 0)
        return Vector(0);
    if (estimated_k.cols() < 1)
        throw InvalidInput("local_lmmse_filter: the estimated channel has no columns");
    if (k < 0 || k >= params.clusters())
        throw InvalidInput("local_lmmse_filter: cluster index out of range");
    const Matrix &Z = params.shift[static_cast<std::size_t>(k)];
    if (Z.rows() != nk)
        throw InvalidInput("local_lmmse_filter: Z_k does not match the cluster size");
    const Real nr = Real(nk) * params.rho[static_cast<std::size_t>(k)];
    Matrix A = estimated_k * estimated_k.adjoint() + Real(nk) * Z;
    A.diagonal().array() += nr;
    return solve_hpd(A, estimated_k.col(0));
}

LocalReceivers build_local_receivers(const Matrix &estimated, const Partition &partition, const ReceiverParams &params)
{
    if (estimated.rows() != partition.antennas())
        throw InvalidInput("build_local_receivers: channel rows do not match the partition");
    LocalReceivers out{partition, {}, Matrix::Zero(partition.antennas(), partition.clusters())};
    for (Index k = 0; k < partition.clusters(); ++k)
    {
        Vector r = local_lmmse_filter(cluster_rows(estimated, partition, k), params, k);
        out.D_r.col(k).segment(partition.offset(k), partition.size(k)) = r;
        out.filters.push_back(std::move(r));
    }
    return out;
}

} // namespace dbp
