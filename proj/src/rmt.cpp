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

#include "dbp/rmt.hpp"

#include <cmath>
#include <sstream>

namespace dbp
{

namespace
{

// Column-major vec of X^T, so that rowvec(X) * vec(Y) = Tr(X Y).
RowVector trace_row(const Matrix &X)
{
    const Matrix Xt = X.transpose();
    return Eigen::Map<const RowVector>(Xt.data(), Xt.size());
}

Vector vec(const Matrix &Y) { return Eigen::Map<const Vector>(Y.data(), Y.size()); }

Matrix inverse_hpd(const Matrix &A)
{
    return hermitian_part(solve_hpd(A, Matrix::Identity(A.rows(), A.cols())));
}

} // namespace

RmtInputs make_rmt_inputs(Partition partition, std::vector<Matrix> a, std::vector<Matrix> b,
                          std::vector<Matrix> shift, std::vector<Real> z)
{
    const Index n = partition.antennas();
    const Index K = partition.clusters();
    if (a.size() != b.size())
        throw InvalidInput("make_rmt_inputs: A and B must have one entry per interferer");
    if (static_cast<Index>(shift.size()) != K || static_cast<Index>(z.size()) != K)
        throw InvalidInput("make_rmt_inputs: need one S_k and one z_k per cluster");
    for (Index k = 0; k < K; ++k)
    {
        const auto i = static_cast<std::size_t>(k);
        if (!(z[i] < 0))
            throw InvalidInput("make_rmt_inputs: z_" + std::to_string(k) + " must be negative");
        if (shift[i].rows() != partition.size(k) || shift[i].cols() != partition.size(k))
            throw InvalidInput("make_rmt_inputs: S_" + std::to_string(k) + " has the wrong size");
    }
    RmtInputs in;
    for (std::size_t j = 0; j < a.size(); ++j)
    {
        if (a[j].rows() != n || b[j].rows() != n || a[j].cols() != b[j].cols())
            throw InvalidInput("make_rmt_inputs: A_j and B_j must both be N x N_x");
        in.omega.push_back(hermitian_part(a[j] * a[j].adjoint()));
        in.ab.push_back(a[j] * b[j].adjoint());
        in.bb.push_back(hermitian_part(b[j] * b[j].adjoint()));
    }
    in.partition = std::move(partition);
    in.a = std::move(a);
    in.b = std::move(b);
    in.shift = std::move(shift);
    in.z = std::move(z);
    return in;
}

RmtInputs make_rmt_inputs(const EstimationModel &est, const ReceiverParams &params)
{
    params.check(est.partition());
    std::vector<Matrix> a, b;
    for (Index j = 1; j < est.users(); ++j)
    {
        const UserEstimation &u = est.user(j);
        a.push_back(u.Phi_sqrt);
        b.push_back(u.V * u.Phi_sqrt);
    }
    std::vector<Real> z;
    for (Real r : params.rho)
        z.push_back(-r);
    return make_rmt_inputs(est.partition(), std::move(a), std::move(b), params.shift, std::move(z));
}

FixedPointSolution solve_fixed_point(const RmtInputs &in, const FixedPointOptions &opt)
{
    if (!(opt.tolerance > 0) || opt.max_iterations < 1)
        throw InvalidInput("solve_fixed_point: tolerance must be positive and max_iterations at least 1");
    const Partition &p = in.partition;
    const Index K = p.clusters();
    const Index M = in.interferers();

    FixedPointSolution sol;
    sol.delta = RealMatrix::Zero(K, M);
    sol.theta.resize(static_cast<std::size_t>(K));

    for (Index k = 0; k < K; ++k)
    {
        const Index nk = p.size(k);
        if (nk == 0)
            continue;
        const auto ki = static_cast<std::size_t>(k);

        // Column j holds vec([Omega_j]_{kk}); row j of L gives Tr([Omega_j]_{kk} X) against vec(X).
        Matrix O(nk * nk, M), L(M, nk * nk);
        for (Index j = 0; j < M; ++j)
        {
            const Matrix Ojkk = block(in.omega[static_cast<std::size_t>(j)], p, k, k);
            O.col(j) = vec(Ojkk);
            L.row(j) = trace_row(Ojkk);
        }
        Matrix base = in.shift[ki];
        base.diagonal().array() -= in.z[ki];

        RealVector delta = RealVector::Ones(M);
        Matrix theta;
        Real change = std::numeric_limits<Real>::infinity();
        std::vector<Real> trace;
        int it = 0;
        while (it < opt.max_iterations)
        {
            ++it;
            const Vector f = (1 + delta.array()).inverse().matrix().cast<Complex>();
            Vector weighted = O * f / Real(nk);
            Matrix A = base + Eigen::Map<const Matrix>(weighted.data(), nk, nk);
            theta = inverse_hpd(A);
            RealVector next = (L * vec(theta)).real() / Real(nk);
            // Absolute for delta <= 1, relative above: large delta (near-singular Omega with perfect CSI)
            // cannot resolve absolute updates of 1e-12.
            change = ((next - delta).array().abs() / next.array().abs().max(Real(1))).maxCoeff();
            delta = std::move(next);
            if (trace.size() < 8 || it % 1000 == 0)
                trace.push_back(change);
            if (change < opt.tolerance)
                break;
        }
        if (!(change < opt.tolerance))
        {
            std::ostringstream msg;
            msg << "solve_fixed_point: cluster " << k << " did not converge in " << opt.max_iterations
                << " iterations; update sizes";
            for (Real t : trace)
                msg << ' ' << t;
            throw NumericError(msg.str());
        }
        // Final consistency check of both equations with the returned Theta.
        const Vector f = (1 + delta.array()).inverse().matrix().cast<Complex>();
        Vector weighted = O * f / Real(nk);
        theta = inverse_hpd(base + Eigen::Map<const Matrix>(weighted.data(), nk, nk));
        const RealVector check = (L * vec(theta)).real() / Real(nk);
        sol.residual = std::max(sol.residual, (check - delta).cwiseAbs().maxCoeff());
        sol.delta.row(k) = delta.transpose();
        sol.theta[ki] = std::move(theta);
        sol.iterations = std::max(sol.iterations, it);
    }
    return sol;
}

struct DeterministicEquivalents::Pair
{
    Index nk = 0, nl = 0;
    Real norm = 0;
    RealVector fk, fl;
    Matrix L;     // M x (nk nl), rows trace_row([Omega_i]_{lk})
    Matrix y_aa;  // (nk nl) x M, columns vec(Theta_k [Omega_j]_{kl} Theta_l)
    Matrix y_ab, y_ba, y_bb;
    Matrix gamma; // Gamma_kl
    Matrix g;     // F_k F_l Xi
    Real radius = 0;
};

DeterministicEquivalents::~DeterministicEquivalents() = default;

DeterministicEquivalents::DeterministicEquivalents(RmtInputs in, const FixedPointOptions &opt)
    : in_(std::move(in)), fp_(solve_fixed_point(in_, opt))
{
}

void DeterministicEquivalents::check_block(const Matrix &A, Index rows, Index cols, const char *what) const
{
    if (A.rows() != rows || A.cols() != cols)
        throw InvalidInput(std::string(what) + ": argument is " + std::to_string(A.rows()) + "x" +
                           std::to_string(A.cols()) + ", expected " + std::to_string(rows) + "x" +
                           std::to_string(cols));
}

const DeterministicEquivalents::Pair &DeterministicEquivalents::pair(Index k, Index l) const
{
    const Partition &p = in_.partition;
    if (k < 0 || l < 0 || k >= p.clusters() || l >= p.clusters())
        throw InvalidInput("DeterministicEquivalents: cluster index out of range");
    std::lock_guard lock(mutex_);
    auto it = pairs_.find({k, l});
    if (it != pairs_.end())
        return *it->second;

    auto q = std::make_unique<Pair>();
    const Index M = in_.interferers();
    q->nk = p.size(k);
    q->nl = p.size(l);
    q->norm = std::sqrt(Real(q->nk) * Real(q->nl));
    q->fk = fp_.f(k);
    q->fl = fp_.f(l);
    const Index sz = q->nk * q->nl;
    q->L.resize(M, sz);
    q->y_aa.resize(sz, M);
    q->y_ab.resize(sz, M);
    q->y_ba.resize(sz, M);
    q->y_bb.resize(sz, M);
    if (sz > 0)
    {
        const Matrix &tk = fp_.theta[static_cast<std::size_t>(k)];
        const Matrix &tl = fp_.theta[static_cast<std::size_t>(l)];
        for (Index j = 0; j < M; ++j)
        {
            const auto ji = static_cast<std::size_t>(j);
            q->L.row(j) = trace_row(block(in_.omega[ji], p, l, k));
            q->y_aa.col(j) = vec(tk * block(in_.omega[ji], p, k, l) * tl);
            q->y_ab.col(j) = vec(tk * block(in_.ab[ji], p, k, l) * tl);
            q->y_ba.col(j) = vec(tk * block(in_.ab[ji], p, l, k).adjoint() * tl);
            q->y_bb.col(j) = vec(tk * block(in_.bb[ji], p, k, l) * tl);
        }
        q->gamma = q->L * q->y_aa / (Real(q->nk) * Real(q->nl));
        const Vector ff = (q->fk.array() * q->fl.array()).matrix().cast<Complex>();
        const Matrix gff = q->gamma * ff.asDiagonal();
        if (M > 0)
        {
            Eigen::ComplexEigenSolver<Matrix> eig(gff, false);
            q->radius = eig.eigenvalues().cwiseAbs().maxCoeff();
        }
        if (!(q->radius < 1))
            throw NumericError("DeterministicEquivalents: spectral radius of Gamma F F for clusters (" +
                               std::to_string(k) + "," + std::to_string(l) + ") is " + std::to_string(q->radius) +
                               ", Xi does not exist");
        const Matrix xi = (Matrix::Identity(M, M) - gff).partialPivLu().inverse();
        q->g = ff.asDiagonal() * xi;
    }
    else
    {
        q->gamma = Matrix::Zero(M, M);
        q->g = Matrix::Zero(M, M);
    }
    return *pairs_.emplace(std::make_pair(k, l), std::move(q)).first->second;
}

Complex DeterministicEquivalents::digamma(Index k, const Matrix &A) const
{
    const Index nk = in_.partition.size(k);
    check_block(A, nk, nk, "digamma");
    if (nk == 0)
        return 0;
    return trace_product(A, fp_.theta[static_cast<std::size_t>(k)]);
}

Complex DeterministicEquivalents::phi(Index k, Index l, const Matrix &A, const Vector &b, PiVariant variant) const
{
    const Partition &p = in_.partition;
    const Index M = in_.interferers();
    check_block(A, p.size(l), p.size(k), "phi");
    if (b.size() != M)
        throw InvalidInput("phi: b must have one entry per interferer");
    if (p.size(k) == 0 || p.size(l) == 0)
        return 0;
    const RealVector fk = fp_.f(k);
    const Matrix At = A * fp_.theta[static_cast<std::size_t>(k)];
    Complex sum = 0;
    for (Index j = 0; j < M; ++j)
    {
        const auto ji = static_cast<std::size_t>(j);
        const Matrix &cross = variant == PiVariant::B ? in_.ab[ji] : in_.omega[ji];
        sum += fk[j] * b[j] * trace_product(At, block(cross, p, k, l));
    }
    return sum / std::sqrt(Real(p.size(k)) * Real(p.size(l)));
}

Complex DeterministicEquivalents::upsilon(Index k, Index l, const Matrix &A, const Matrix &B) const
{
    const Partition &p = in_.partition;
    check_block(A, p.size(l), p.size(k), "upsilon");
    check_block(B, p.size(k), p.size(l), "upsilon");
    const Pair &q = pair(k, l);
    if (q.nk == 0 || q.nl == 0)
        return 0;
    const Matrix tBt = fp_.theta[static_cast<std::size_t>(k)] * B * fp_.theta[static_cast<std::size_t>(l)];
    const Complex direct = trace_product(A, tBt);
    const RowVector lt = trace_row(A) * q.y_aa / q.norm;
    const Vector lam = q.L * vec(tBt) / q.norm;
    return direct + (lt * q.g * lam)(0);
}

Complex DeterministicEquivalents::pi(Index k, Index l, const Matrix &A, PiVariant variant) const
{
    const Partition &p = in_.partition;
    check_block(A, p.size(l), p.size(k), "pi");
    const Pair &q = pair(k, l);
    if (q.nk == 0 || q.nl == 0)
        return 0;
    const Index M = in_.interferers();
    const bool b = variant == PiVariant::B;
    const Matrix &y_bb = b ? q.y_bb : q.y_aa;
    const Matrix &y_ba = b ? q.y_ba : q.y_aa;
    const Matrix &y_ab = b ? q.y_ab : q.y_aa;

    // D_{B,A,k} and D_{A,B,l}; for variant A both reduce to delta.
    Vector d_ba_k(M), d_ab_l(M);
    const Matrix &tk = fp_.theta[static_cast<std::size_t>(k)];
    const Matrix &tl = fp_.theta[static_cast<std::size_t>(l)];
    for (Index j = 0; j < M; ++j)
    {
        if (b)
        {
            const auto ji = static_cast<std::size_t>(j);
            d_ba_k[j] = trace_product(Matrix(block(in_.ab[ji], p, k, k).adjoint()), tk) / Real(q.nk);
            d_ab_l[j] = trace_product(block(in_.ab[ji], p, l, l), tl) / Real(q.nl);
        }
        else
        {
            d_ba_k[j] = fp_.delta(k, j);
            d_ab_l[j] = fp_.delta(l, j);
        }
    }
    const Vector c_l = (d_ab_l.array() * q.fl.array().cast<Complex>()).matrix();
    const Vector c_k = (d_ba_k.array() * q.fk.array().cast<Complex>()).matrix();

    const RowVector a_row = trace_row(A);
    const RowVector lt_bb = a_row * y_bb / q.norm;
    const RowVector lt_ba = a_row * y_ba / q.norm;
    const RowVector lt_ab = a_row * y_ab / q.norm;
    const Complex first = lt_bb.sum() - (lt_ba * c_l)(0) - (lt_ab * c_k)(0);

    const Real nn = Real(q.nk) * Real(q.nl);
    const Vector ones = Vector::Ones(M);
    const Vector inner = q.L * (y_bb * ones) / nn - q.L * (y_ba * c_l) / nn - q.L * (y_ab * c_k) / nn +
                         (d_ba_k.array() * d_ab_l.array()).matrix();
    const RowVector lt = a_row * q.y_aa / q.norm;
    return first + (lt * q.g * inner)(0);
}

Real DeterministicEquivalents::spectral_radius(Index k, Index l) const { return pair(k, l).radius; }

Real DeterministicEquivalents::max_spectral_radius() const
{
    Real r = 0;
    for (Index k = 0; k < in_.partition.clusters(); ++k)
        for (Index l = 0; l < in_.partition.clusters(); ++l)
            r = std::max(r, spectral_radius(k, l));
    return r;
}

namespace
{

std::vector<Index> active_clusters(const Partition &p)
{
    std::vector<Index> idx;
    for (Index k = 0; k < p.clusters(); ++k)
        if (p.size(k) > 0)
            idx.push_back(k);
    return idx;
}

Matrix restrict(const Matrix &A, const std::vector<Index> &idx)
{
    Matrix out(static_cast<Index>(idx.size()), static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(static_cast<Index>(i), static_cast<Index>(j)) = A(idx[i], idx[j]);
    return out;
}

Vector restrict(const RealVector &v, const std::vector<Index> &idx)
{
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        out[static_cast<Index>(i)] = v[idx[i]];
    return out;
}

Vector solve_delta(const Matrix &D, const Vector &v, const char *name)
{
    try
    {
        return solve_hpd(D, v);
    }
    catch (const NumericError &)
    {
        throw NumericError(std::string("deterministic_sinr: ") + name + " is not positive definite");
    }
}

} // namespace

RmtSolution deterministic_sinr(const EstimationModel &est, const ReceiverParams &params, Real noise,
                     const std::optional<RowVector> &alpha, const FixedPointOptions &opt)
{
    if (!(noise > 0))
        throw InvalidInput("deterministic_sinr: noise power must be positive");
    DeterministicEquivalents de(make_rmt_inputs(est, params), opt);
    const Partition &p = est.partition();
    const Index K = p.clusters();
    const Matrix &phi0 = est.user(0).Phi;
    Matrix wn = est.W();
    wn.diagonal().array() += noise;
    Matrix dwn = est.DW();
    dwn.diagonal().array() += noise;

    RmtSolution sol;
    sol.v = RealVector::Zero(K);
    sol.delta = Matrix::Zero(K, K);
    sol.delta_I = Matrix::Zero(K, K);
    for (Index k = 0; k < K; ++k)
        if (p.size(k) > 0)
            sol.v[k] = de.digamma(k, block(phi0, p, k, k)).real() / Real(p.size(k));
    for (Index k = 0; k < K; ++k)
        for (Index l = 0; l < K; ++l)
        {
            if (p.size(k) == 0 || p.size(l) == 0)
                continue;
            const Real nn = Real(p.size(k)) * Real(p.size(l));
            const Matrix A = block(phi0, p, l, k);
            sol.delta(k, l) = de.upsilon(k, l, A, block(wn, p, k, l)) / nn + de.pi(k, l, A, PiVariant::B) / std::sqrt(nn);
            sol.delta_I(k, l) =
                de.upsilon(k, l, A, block(dwn, p, k, l)) / nn + de.pi(k, l, A, PiVariant::A) / std::sqrt(nn);
        }
    sol.diagnostics.hermitian_defect = std::max(hermitian_defect(sol.delta), hermitian_defect(sol.delta_I));
    sol.delta = hermitian_part(sol.delta);
    sol.delta_I = hermitian_part(sol.delta_I);
    sol.J = (1 + sol.v.array()).inverse().matrix().cast<Complex>().asDiagonal();

    const std::vector<Index> act = active_clusters(p);
    const Matrix D = restrict(sol.delta, act);
    const Matrix DI = restrict(sol.delta_I, act);
    const Vector v = restrict(sol.v, act);
    sol.gamma_lfoc = v.dot(solve_delta(D, v, "Delta")).real();
    const Vector x = solve_delta(DI, v, "Delta_I");
    sol.gamma_lfsc = std::norm(v.dot(x)) / x.dot(D * x).real();
    if (alpha)
        sol.gamma_lfcc = lfcc_sinr(sol, *alpha);

    sol.diagnostics.fixed_point_iterations = de.fixed_point().iterations;
    sol.diagnostics.fixed_point_residual = de.fixed_point().residual;
    sol.diagnostics.max_spectral_radius = de.max_spectral_radius();
    sol.diagnostics.eigenvalues_bounded_below = est.spatial().eigenvalues_bounded_below();
    return sol;
}

Real lfcc_sinr(const RmtSolution &sol, const RowVector &alpha)
{
    if (alpha.size() != sol.v.size())
        throw InvalidInput("lfcc_sinr: weight vector has the wrong length");
    const RowVector aj = alpha * sol.J;
    const Real den = (aj * sol.delta * aj.adjoint())(0, 0).real();
    if (!(den > 0))
        throw NumericError("lfcc_sinr: SINR undefined for these weights");
    return std::norm((aj * sol.v.cast<Complex>())(0)) / den;
}

nlohmann::json rmt_solution_to_json(const RmtSolution &sol)
{
    nlohmann::json j;
    j["v"] = std::vector<Real>(sol.v.data(), sol.v.data() + sol.v.size());
    j["delta"] = matrix_to_json(sol.delta);
    j["delta_I"] = matrix_to_json(sol.delta_I);
    j["gamma_lfoc"] = sol.gamma_lfoc;
    j["gamma_lfsc"] = sol.gamma_lfsc;
    j["gamma_lfcc"] = sol.gamma_lfcc ? nlohmann::json(*sol.gamma_lfcc) : nlohmann::json(nullptr);
    j["diagnostics"] = {{"fixed_point_iterations", sol.diagnostics.fixed_point_iterations},
                        {"fixed_point_residual", sol.diagnostics.fixed_point_residual},
                        {"max_spectral_radius", sol.diagnostics.max_spectral_radius},
                        {"hermitian_defect", sol.diagnostics.hermitian_defect},
                        {"eigenvalues_bounded_below", sol.diagnostics.eigenvalues_bounded_below}};
    return j;
}

} // namespace dbp
