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

#ifndef DBP_CHANNEL_HPP
#define DBP_CHANNEL_HPP

#include "dbp/core.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace dbp
{

// Uniform linear array with a Gaussian angular power profile. Angles in degrees,
// spacing in wavelengths.
struct CorrelationParams
{
    Real mean_angle_deg = 0;
    Real rms_spread_deg = 10;
    Real antenna_spacing = 1;
    Index antennas = 1;
};

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule
{
    RealVector nodes;
    RealVector weights;
};

GaussLegendreRule gauss_legendre(Index order);

// [C]_{m,n} = int_{-180}^{180} (2 pi delta^2)^{-1/2} exp(2 pi j d (m - n) sin(pi phi / 180) - (phi - eta)^2 / (2 delta^2)) dphi
// evaluated by Gauss-Legendre quadrature with the order doubled until successive
// results agree to 1e-9. Negative eigenvalues left by the quadrature are clipped.
Matrix correlation_matrix(const CorrelationParams &p);

// Per-user spatial correlation R_j, j = 0..M, together with the antenna partition.
class SpatialModel
{
  public:
    SpatialModel(std::vector<Matrix> correlation, Partition partition);

    Index antennas() const { return partition_.antennas(); }
    // Number of interfering users M (the model holds M + 1 users).
    Index interferers() const { return static_cast<Index>(correlation_.size()) - 1; }
    Index users() const { return static_cast<Index>(correlation_.size()); }
    const Partition &partition() const { return partition_; }
    const Matrix &correlation(Index j) const { return correlation_.at(static_cast<std::size_t>(j)); }
    const Matrix &correlation_sqrt(Index j) const { return sqrt_.at(static_cast<std::size_t>(j)); }
    const std::vector<Matrix> &correlations() const { return correlation_; }

    // Same correlations regrouped under another partition of the same array.
    SpatialModel repartitioned(Partition partition) const;

    // Smallest eigenvalue over all users, and whether it clears the 1e-8 floor the
    // deterministic equivalents assume. Models below the floor still simulate.
    Real min_eigenvalue() const { return min_eigenvalue_; }
    bool eigenvalues_bounded_below() const { return min_eigenvalue_ > 1e-8; }

    bool is_block_diagonal(Real tol = 0) const;

  private:
    std::vector<Matrix> correlation_;
    std::vector<Matrix> sqrt_;
    Partition partition_;
    Real min_eigenvalue_ = 0;
};

// R_j = C(j / (180 M), 10 + j / (10 M), spacing) for j = 0..M.
SpatialModel ula_spatial_model(Index antennas, Index interferers, const Partition &partition,
                                 Real antenna_spacing = 1);

SpatialModel iid_spatial_model(Index antennas, Index interferers, const Partition &partition);

// Drops inter-cluster correlation: R_j -> blockdiag([R_j]_{[k,k]}).
SpatialModel cluster_decorrelated(const SpatialModel &model);

// Columns h_j = R_j^{1/2} z_j with fresh z_j ~ CN(0, I_N); N x (M + 1).
Matrix sample_true_channel(const SpatialModel &model, RngStream &rng);

// JSON matrix container: {"rows": r, "cols": c, "data": [re, im, re, im, ...]} in row-major order.
nlohmann::json matrix_to_json(const Matrix &A);
Matrix matrix_from_json(const nlohmann::json &j);

nlohmann::json spatial_model_to_json(const SpatialModel &model);
SpatialModel spatial_model_from_json(const nlohmann::json &j);

void save_spatial_model(const SpatialModel &model, const std::string &path);
SpatialModel load_spatial_model(const std::string &path);

} // namespace dbp

#endif // DBP_CHANNEL_HPP
