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


#ifndef DBP_RMT_HPP
#define DBP_RMT_HPP

#include "dbp/fusion.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

namespace dbp
{

// Model behind the deterministic equivalents: columns A_j x_j and B_j x_j (j = 1..M) with x_j ~ CN(0, I),
// per-cluster resolvents Q_k = (X_k X_k^H + S_k - z_k I)^{-1} with X_k the rows of cluster k scaled by
// 1/sqrt(N_k). The cross products P_j O_j^H are precomputed because every functional uses them blockwise.
struct RmtInputs
{
    Partition partition;
    std::vector<Matrix> a;     // A_j, N x N_x
    std::vector<Matrix> b;     // B_j, N x N_x
    std::vector<Matrix> omega; // A_j A_j^H
    std::vector<Matrix> ab;    // A_j B_j^H
    std::vector<Matrix> bb;    // B_j B_j^H
    std::vector<Matrix> shift; // S_k
    std::vector<Real> z;       // z_k < 0

    Index interferers() const { return static_cast<Index>(a.size()); }
};

// Fills omega, ab and bb from a and b and validates every size and sign.
RmtInputs make_rmt_inputs(Partition partition, std::vector<Matrix> a, std::vector<Matrix> b,
                          std::vector<Matrix> shift, std::vector<Real> z);

// Receiver substitution: A_j = Phi_j^{1/2}, B_j = V_j Phi_j^{1/2} over the interferers j = 1..M,
// S_k = Z_k, z_k = -rho_k.
RmtInputs make_rmt_inputs(const EstimationModel &est, const ReceiverParams &params);

struct FixedPointOptions
{
    Real tolerance = 1e-12; // on max_j |update_j| / max(1, delta_j)
    int max_iterations = 10000;
};

struct FixedPointSolution
{
    RealMatrix delta;           // K x M, zero rows for empty clusters
    std::vector<Matrix> theta;  // Theta_k, N_k x N_k
    int iterations = 0;         // worst cluster
    Real residual = 0;          // max |delta_jk - Tr(Omega_j,kk Theta_k) / N_k|

    // diag(1 / (1 + delta_jk)) as a vector over j.
    RealVector f(Index k) const { return (1 + delta.row(k).transpose().array()).inverse().matrix(); }
};

FixedPointSolution solve_fixed_point(const RmtInputs &in, const FixedPointOptions &opt = {});

enum class PiVariant
{
    B,
    A
};

// Deterministic equivalents of the resolvent functionals. Quantities that depend only on the cluster
// pair (k, l) are built on first use and cached.
class DeterministicEquivalents
{
  public:
    explicit DeterministicEquivalents(RmtInputs in, const FixedPointOptions &opt = {});
    ~DeterministicEquivalents();

    const RmtInputs &inputs() const { return in_; }
    const FixedPointSolution &fixed_point() const { return fp_; }

    // Tr(A Theta_k); A is N_k x N_k.
    Complex digamma(Index k, const Matrix &A) const;
    // sum_j [F_k b]_j Tr(A Theta_k A_jk B_jl^H) / sqrt(N_k N_l); A is N_l x N_k.
    Complex phi(Index k, Index l, const Matrix &A, const Vector &b, PiVariant variant = PiVariant::B) const;
    // Tr(A Theta_k B Theta_l) + lambda_tilde(A) F_k F_l Xi lambda(B); A is N_l x N_k, B is N_k x N_l.
    Complex upsilon(Index k, Index l, const Matrix &A, const Matrix &B) const;
    // Equivalent of Tr(A Q_k Y_k Y_l^H Q_l) (variant B) or Tr(A Q_k X_k X_l^H Q_l) (variant A).
    Complex pi(Index k, Index l, const Matrix &A, PiVariant variant) const;

    // Spectral radius of Gamma_kl F_k F_l.
    Real spectral_radius(Index k, Index l) const;
    Real max_spectral_radius() const;

  private:
    struct Pair;
    const Pair &pair(Index k, Index l) const;
    void check_block(const Matrix &A, Index rows, Index cols, const char *what) const;

    RmtInputs in_;
    FixedPointSolution fp_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<Index, Index>, std::unique_ptr<Pair>> pairs_;
};

struct RmtDiagnostics
{
    int fixed_point_iterations = 0;
    Real fixed_point_residual = 0;
    Real max_spectral_radius = 0;
    Real hermitian_defect = 0; // of Delta before symmetrization
    bool eigenvalues_bounded_below = true;
};

struct RmtSolution
{
    RealVector v;
    Matrix J;
    Matrix delta;
    Matrix delta_I;
    Real gamma_lfoc = 0;
    Real gamma_lfsc = 0;
    std::optional<Real> gamma_lfcc;
    RmtDiagnostics diagnostics;
};

RmtSolution deterministic_sinr(const EstimationModel &est, const ReceiverParams &params, Real noise,
                     const std::optional<RowVector> &alpha = std::nullopt, const FixedPointOptions &opt = {});

// |alpha J v|^2 / (alpha J Delta J alpha^H)
Real lfcc_sinr(const RmtSolution &sol, const RowVector &alpha);

inline FusionWeights lfcc_matched_weights(const RmtSolution &sol) { return lfcc_matched_weights(sol.v, sol.delta); }

nlohmann::json rmt_solution_to_json(const RmtSolution &sol);

} // namespace dbp

#endif // DBP_RMT_HPP
