#pragma once

// Dense symmetric-matrix spectral functions and SVD. Everything here is a
// pure function of its input and safe to call concurrently.

#include <Eigen/Dense>
#include <cmath>

#include "btacm/errors.hpp"

namespace btacm {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename Scalar>
struct SpectralDecomposition {
    VectorX<Scalar> eigenvalues;   // ascending
    MatrixX<Scalar> eigenvectors;  // orthogonal, one column per eigenvalue
};

template <typename Scalar>
struct SvdDecomposition {
    MatrixX<Scalar> u;
    VectorX<Scalar> singular_values;  // descending, >= 0
    MatrixX<Scalar> v;
};

enum class SpdFn { Sqrt, InvSqrt, Log, Exp };

template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& a) {
    return ((a + a.transpose()) / 2).eval();
}

// Eigendecomposition of a symmetric matrix. The input is symmetrized on
// entry; eigenvalues come out ascending and each eigenvector is oriented so
// that its first component of magnitude > 1e-12 is positive, which keeps
// golden tests byte-stable.
template <typename Derived>
SpectralDecomposition<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (!m.allFinite()) {
        throw InvalidInput("sym_eig: non-finite entries");
    }
    if (m.rows() != m.cols()) {
        throw ShapeError("sym_eig: matrix must be square");
    }
    MatrixX<Scalar> s = symmetrize(m);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(s);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("sym_eig: eigensolver failed");
    }
    SpectralDecomposition<Scalar> out{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index j = 0; j < out.eigenvectors.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.eigenvectors.rows(); ++i) {
            const Scalar v = out.eigenvectors(i, j);
            if (std::abs(v) > Scalar(1e-12)) {
                if (v < Scalar(0)) out.eigenvectors.col(j) = -out.eigenvectors.col(j);
                break;
            }
        }
    }
    return out;
}

// Threshold below which an eigenvalue is treated as not positive. Callers
// that want clamping must repair their input explicitly.
template <typename Scalar>
Scalar eps_pd(Scalar lambda_max) {
    return Scalar(1e-12) * std::max(Scalar(1), lambda_max);
}

// V f(diag(lambda)) V^T for f in {sqrt, invsqrt, log, exp}, symmetrized.
template <typename Derived>
MatrixX<typename Derived::Scalar> spd_fn(const Eigen::MatrixBase<Derived>& m, SpdFn f) {
    using Scalar = typename Derived::Scalar;
    SpectralDecomposition<Scalar> eig = sym_eig(m);
    const Scalar lambda_max = eig.eigenvalues(eig.eigenvalues.size() - 1);
    if (f != SpdFn::Exp && eig.eigenvalues(0) <= eps_pd(lambda_max)) {
        throw NotPositiveDefinite("spd_fn: eigenvalue below positive-definite threshold");
    }
    VectorX<Scalar> mapped(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < mapped.size(); ++i) {
        const Scalar x = eig.eigenvalues(i);
        switch (f) {
            case SpdFn::Sqrt: mapped(i) = std::sqrt(x); break;
            case SpdFn::InvSqrt: mapped(i) = Scalar(1) / std::sqrt(x); break;
            case SpdFn::Log: mapped(i) = std::log(x); break;
            case SpdFn::Exp: mapped(i) = std::exp(x); break;
        }
    }
    MatrixX<Scalar> r =
        eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.transpose();
    return symmetrize(r);
}

// Full SVD of a square real matrix, singular values descending.
template <typename Derived>
SvdDecomposition<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (!m.allFinite()) {
        throw InvalidInput("svd: non-finite entries");
    }
    Eigen::JacobiSVD<MatrixX<Scalar>> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return SvdDecomposition<Scalar>{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

}  // namespace btacm
