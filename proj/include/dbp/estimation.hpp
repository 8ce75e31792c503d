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


#ifndef DBP_ESTIMATION_HPP
#define DBP_ESTIMATION_HPP

#include "dbp/channel.hpp"

#include <vector>

namespace dbp
{

// Per-user matrices of the decentralized MMSE channel estimator. Each cluster estimates
// its own block of h_j from orthogonal pilots with noise power sigma_t^2, so the estimate
// is h_hat_j ~ CN(0, Phi_j) and h_j | h_hat_j ~ CN(V_j h_hat_j, W_j).
struct UserEstimation
{
    Matrix T;     // R (sigma_t^2 I + R)^{-1}
    Matrix DT;    // D_R (sigma_t^2 I + D_R)^{-1}, block-diagonal
    Matrix Phi;   // D_T (sigma_t^2 I + R) D_T
    Matrix V;     // T D_T^{-1}
    Matrix W;     // sigma_t^2 T
    Matrix Phi_sqrt;
    Matrix W_sqrt;
};

class EstimationModel
{
  public:
    EstimationModel(SpatialModel spatial, Real training_noise, std::vector<UserEstimation> users);

    const SpatialModel &spatial() const { return spatial_; }
    const Partition &partition() const { return spatial_.partition(); }
    Index antennas() const { return spatial_.antennas(); }
    Index interferers() const { return spatial_.interferers(); }
    Index users() const { return spatial_.users(); }
    Real training_noise() const { return training_noise_; }

    const UserEstimation &user(Index j) const { return users_.at(static_cast<std::size_t>(j)); }

    // W = sum_j W_j and D_W = sigma_t^2 sum_j D_{T,j}.
    const Matrix &W() const { return W_; }
    const Matrix &DW() const { return DW_; }

  private:
    SpatialModel spatial_;
    Real training_noise_;
    std::vector<UserEstimation> users_;
    Matrix W_;
    Matrix DW_;
};

// Throws ModelError naming (j, k) if sigma_t^2 > 0 and a diagonal block [R_j]_{[k,k]} is singular.
EstimationModel build_estimation_model(const SpatialModel &model, Real training_noise);

// True, estimated and posterior-mean channels of one realization, each N x (M + 1).
struct ChannelRealization
{
    Matrix true_channel;   // Sigma
    Matrix estimated;      // Sigma_hat
    Matrix posterior_mean; // Sigma_tilde, column j = V_j h_hat_j
};

// h_hat_j = Phi_j^{1/2} z, h_tilde_j = V_j h_hat_j, h_j = h_tilde_j + W_j^{1/2} z'.
ChannelRealization sample_estimated_channel(const EstimationModel &est, RngStream &rng);

} // namespace dbp

#endif // DBP_ESTIMATION_HPP
