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

#ifndef DBP_CORE_HPP
#define DBP_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbp
{

using Index = Eigen::Index;

// Dense complex types, templated on the real scalar. The simulator itself runs in double.
template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using CRowVector = Eigen::Matrix<std::complex<Real>, 1, Eigen::Dynamic>;

using Real = double;
using Complex = std::complex<double>;
using Matrix = CMatrix<double>;
using Vector = CVector<double>;
using RowVector = CRowVector<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Error taxonomy shared by every module.
class InvalidInput : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class ModelError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Contiguous split of N antennas into K clusters. Cluster k owns rows [offset(k), offset(k) + size(k)).
class Partition
{
  public:
    Partition() = default;
    explicit Partition(std::vector<Index> cluster_sizes);

    // K clusters whose sizes differ by at most one (the larger ones last).
    static Partition balanced(Index antennas, Index clusters);

    Index clusters() const { return static_cast<Index>(sizes_.size()); }
    Index antennas() const { return antennas_; }
    Index size(Index k) const { return sizes_.at(static_cast<std::size_t>(k)); }
    Index offset(Index k) const { return offsets_.at(static_cast<std::size_t>(k)); }
    const std::vector<Index> &sizes() const { return sizes_; }
    bool has_empty_cluster() const;

    bool operator==(const Partition &) const = default;

  private:
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    Index antennas_ = 0;
};

// [A]_{[k,l]}: rows of cluster k, columns of cluster l.
template <typename Derived>
auto block(const Eigen::MatrixBase<Derived> &A, const Partition &p, Index k, Index l)
{
    if (A.rows() != p.antennas() || A.cols() != p.antennas())
        throw InvalidInput("block: matrix is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                           " but partition covers " + std::to_string(p.antennas()) + " antennas");
    if (k < 0 || l < 0 || k >= p.clusters() || l >= p.clusters())
        throw InvalidInput("block: cluster index out of range");
    return A.block(p.offset(k), p.offset(l), p.size(k), p.size(l));
}

// Rows of cluster k (any column count).
template <typename Derived>
auto cluster_rows(const Eigen::MatrixBase<Derived> &A, const Partition &p, Index k)
{
    if (A.rows() != p.antennas())
        throw InvalidInput("cluster_rows: row count does not match partition");
    return A.middleRows(p.offset(k), p.size(k));
}

// Block-diagonal part of A with respect to the partition.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
block_diagonal(const Eigen::MatrixBase<Derived> &A, const Partition &p)
{
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> D =
        Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(A.rows(), A.cols());
    for (Index k = 0; k < p.clusters(); ++k)
        D.block(p.offset(k), p.offset(k), p.size(k), p.size(k)) = block(A, p, k, k);
    return D;
}

template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real hermitian_defect(const Eigen::MatrixBase<Derived> &A)
{
    using R = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
    const R scale = A.norm();
    if (scale == R(0))
        return R(0);
    return (A - A.adjoint()).norm() / scale;
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived> &A, double rel_tol = 1e-12)
{
    return A.rows() == A.cols() && hermitian_defect(A) <= rel_tol;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> hermitian_part(const Eigen::MatrixBase<Derived> &A)
{
    return (A + A.adjoint()) / typename Eigen::NumTraits<typename Derived::Scalar>::Real(2);
}

// Principal square root of a Hermitian PSD matrix via eigendecomposition.
// Eigenvalues down to -1e-10 * ||A|| are clipped to zero; anything more negative is rejected.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> psd_sqrt(const Eigen::MatrixBase<Derived> &A)
{
    using Scalar = typename Derived::Scalar;
    using R = typename Eigen::NumTraits<Scalar>::Real;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    if (A.rows() != A.cols())
        throw InvalidInput("psd_sqrt: matrix is not square");
    if (A.size() == 0)
        return Dense(A.rows(), A.cols());
    if (!is_hermitian(A))
        throw InvalidInput("psd_sqrt: matrix is not Hermitian (relative defect " +
                           std::to_string(static_cast<double>(hermitian_defect(A))) + ")");

    Eigen::SelfAdjointEigenSolver<Dense> eig(hermitian_part(A));
    if (eig.info() != Eigen::Success)
        throw NumericError("psd_sqrt: eigendecomposition failed");
    const auto &lambda = eig.eigenvalues();
    const R norm = lambda.cwiseAbs().maxCoeff();
    if (lambda.minCoeff() < -R(1e-10) * norm)
        throw InvalidInput("psd_sqrt: matrix is not positive semidefinite (min eigenvalue " +
                           std::to_string(static_cast<double>(lambda.minCoeff())) + ")");
    const auto roots = lambda.cwiseMax(R(0)).cwiseSqrt();
    const auto &U = eig.eigenvectors();
    return hermitian_part(U * roots.asDiagonal() * U.adjoint());
}

// Clip the negative spectrum of a Hermitian matrix to zero.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> clip_to_psd(const Eigen::MatrixBase<Derived> &A)
{
    using Scalar = typename Derived::Scalar;
    using R = typename Eigen::NumTraits<Scalar>::Real;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::SelfAdjointEigenSolver<Dense> eig(hermitian_part(A));
    if (eig.info() != Eigen::Success)
        throw NumericError("clip_to_psd: eigendecomposition failed");
    if (eig.eigenvalues().minCoeff() >= R(0))
        return hermitian_part(A);
    const auto &U = eig.eigenvectors();
    return hermitian_part(U * eig.eigenvalues().cwiseMax(R(0)).asDiagonal() * U.adjoint());
}

// Solve A X = B for Hermitian positive-definite A by Cholesky.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedB::Scalar, Eigen::Dynamic, DerivedB::ColsAtCompileTime>
solve_hpd(const Eigen::MatrixBase<DerivedA> &A, const Eigen::MatrixBase<DerivedB> &B)
{
    using Dense = Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (A.rows() != A.cols() || A.rows() != B.rows())
        throw InvalidInput("solve_hpd: dimension mismatch");
    Eigen::LLT<Dense> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericError("solve_hpd: matrix is not positive definite");
    return llt.solve(B);
}

// Tr(X Y) without forming the product.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar trace_product(const Eigen::MatrixBase<DerivedX> &X, const Eigen::MatrixBase<DerivedY> &Y)
{
    if (X.rows() != Y.cols() || X.cols() != Y.rows())
        throw InvalidInput("trace_product: dimension mismatch");
    return X.cwiseProduct(Y.transpose()).sum();
}

// Per-trial random stream. Streams are keyed by (seed, stream, substream) so trials are
// reproducible independently of scheduling.
class RngStream
{
  public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0);

    std::mt19937_64 &engine() { return engine_; }
    Real normal() { return normal_(engine_); }
    Real uniform(Real lo, Real hi);

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<Real> normal_;
};

// Entries i.i.d. CN(0, 1): real and imaginary parts each N(0, 1/2).
Vector sample_standard_complex_gaussian(Index n, RngStream &rng);
Matrix sample_standard_complex_gaussian(Index rows, Index cols, RngStream &rng);

inline Real db_to_linear(Real db) { return std::pow(Real(10), db / Real(10)); }
inline Real linear_to_db(Real x) { return Real(10) * std::log10(x); }

} // namespace dbp

#endif // DBP_CORE_HPP
