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

#include "dbp/estimation.hpp"

namespace dbp
{

EstimationModel::EstimationModel(SpatialModel spatial, Real training_noise, std::vector<UserEstimation> users)
    : spatial_(std::move(spatial)), training_noise_(training_noise), users_(std::move(users))
{
    if (static_cast<Index>(users_.size()) != spatial_.users())
        throw InvalidInput("EstimationModel: one set of matrices per user is required");
    const Index n = spatial_.antennas();
    W_ = Matrix::Zero(n, n);
    DW_ = Matrix::Zero(n, n);
    for (const UserEstimation &u : users_)
    {
        W_ += u.W;
        DW_ += training_noise_ * u.DT;
    }
}

EstimationModel build_estimation_model(const SpatialModel &model, Real training_noise)
{
    if (!(training_noise >= 0) || !std::isfinite(training_noise))
        throw InvalidInput("build_estimation_model: training noise power must be finite and non-negative");

    const Index n = model.antennas();
    const Partition &p = model.partition();
    const Matrix I = Matrix::Identity(n, n);
    const Real s = training_noise;

    std::vector<UserEstimation> users;
    users.reserve(static_cast<std::size_t>(model.users()));
    for (Index j = 0; j < model.users(); ++j)
    {
        const Matrix &R = model.correlation(j);
        UserEstimation u;
        if (s == 0)
        {
            u.T = I;
            u.DT = I;
            u.Phi = R;
            u.V = I;
            u.W = Matrix::Zero(n, n);
            u.Phi_sqrt = model.correlation_sqrt(j);
            u.W_sqrt = Matrix::Zero(n, n);
            users.push_back(std::move(u));
            continue;
        }

        const Matrix shifted = s * I + R;
        u.T = hermitian_part(solve_hpd(shifted, R));
        u.DT = Matrix::Zero(n, n);
        Matrix DT_inv = Matrix::Zero(n, n);
        for (Index k = 0; k < p.clusters(); ++k)
        {
            const Index o = p.offset(k), nk = p.size(k);
            if (nk == 0)
                continue;
            const Matrix Rkk = block(R, p, k, k);
            Eigen::LLT<Matrix> llt(Rkk);
            if (llt.info() != Eigen::Success)
                throw ModelError("build_estimation_model: diagonal block [R_" + std::to_string(j) + "]_{[" +
                                 std::to_string(k) + "," + std::to_string(k) + "]} is singular");
            const Matrix Ikk = Matrix::Identity(nk, nk);
            u.DT.block(o, o, nk, nk) = hermitian_part(solve_hpd(Rkk + s * Ikk, Rkk));
            // D_T^{-1} = (s I + D_R) D_R^{-1} = I + s D_R^{-1}
            DT_inv.block(o, o, nk, nk) = Ikk + s * llt.solve(Ikk);
        }
        u.Phi = hermitian_part(u.DT * shifted * u.DT);
        u.V = u.T * DT_inv;
        u.W = s * u.T;
        u.Phi_sqrt = psd_sqrt(u.Phi);
        u.W_sqrt = psd_sqrt(clip_to_psd(u.W));
        users.push_back(std::move(u));
    }
    return EstimationModel(model, training_noise, std::move(users));
}

ChannelRealization sample_estimated_channel(const EstimationModel &est, RngStream &rng)
{
    const Index n = est.antennas();
    ChannelRealization out{Matrix(n, est.users()), Matrix(n, est.users()), Matrix(n, est.users())};
    const bool perfect = est.training_noise() == 0;
    for (Index j = 0; j < est.users(); ++j)
    {
        const UserEstimation &u = est.user(j);
        out.estimated.col(j) = u.Phi_sqrt * sample_standard_complex_gaussian(n, rng);
        if (perfect)
        {
            out.posterior_mean.col(j) = out.estimated.col(j);
            out.true_channel.col(j) = out.estimated.col(j);
            continue;
        }
        out.posterior_mean.col(j) = u.V * out.estimated.col(j);
        out.true_channel.col(j) = out.posterior_mean.col(j) + u.W_sqrt * sample_standard_complex_gaussian(n, rng);
    }
    return out;
}

} // namespace dbp
