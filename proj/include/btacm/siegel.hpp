#pragma once

// Geometry of the Siegel disk SD_d = { W real d x d : I - W W^T > 0 }:
// membership margin, Mobius isometries, log maps, distance, and tangent
// vectorization in the origin chart. All arithmetic is real; lagged
// covariances of real signals stay real, so the complex disk is never
// needed here.

#include <Eigen/Dense>
#include <cmath>

#include "btacm/errors.hpp"
#include "btacm/matfun.hpp"

namespace btacm {

// Counts of numerical safeguards taken during a sequence of calls. Owned by
// the caller so the library keeps no global mutable state.
struct SiegelDiag {
    long clamp_count = 0;
};

// Min-eigenvalue of I - w w^T; positive iff w lies in the open disk.
inline double siegel_margin(const Eigen::MatrixXd& w) {
    if (!w.allFinite()) {
        throw InvalidInput("siegel_margin: non-finite entries");
    }
    if (w.rows() != w.cols()) {
        throw ShapeError("siegel_margin: matrix must be square");
    }
    const Eigen::Index n = w.rows();
    const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n) - w * w.transpose();
    return sym_eig(g).eigenvalues(0);
}

// Isometry of the disk sending psi to the origin:
//   T_psi(w) = (I - psi psi^T)^{-1/2} (w - psi) (I - psi^T w)^{-1} (I - psi^T psi)^{1/2}
inline Eigen::MatrixXd mobius_to_origin(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& w) {
    if (psi.rows() != w.rows() || psi.cols() != w.cols() || psi.rows() != psi.cols()) {
        throw ShapeError("mobius_to_origin: dimension mismatch");
    }
    const Eigen::Index n = psi.rows();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd left = spd_fn((eye - psi * psi.transpose()).eval(), SpdFn::InvSqrt);
    const Eigen::MatrixXd right = spd_fn((eye - psi.transpose() * psi).eval(), SpdFn::Sqrt);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(eye - psi.transpose() * w);
    if (!lu.isInvertible()) {
        throw NumericalError("mobius_to_origin: I - psi^T w is singular");
    }
    return left * (w - psi) * lu.solve(right);
}

namespace detail {

// Singular values clamped to the open disk before artanh.
inline Eigen::VectorXd clamped_artanh_sigma(const Eigen::VectorXd& sigma, SiegelDiag* diag) {
    constexpr double kMaxSigma = 1.0 - 1e-12;
    Eigen::VectorXd out(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        double s = sigma(i);
        if (s > kMaxSigma) {
            s = kMaxSigma;
            if (diag) ++diag->clamp_count;
        }
        out(i) = std::atanh(s);
    }
    return out;
}

}  // namespace detail

// Log map at the origin: with w = U diag(sigma) V^T, returns
// U diag(artanh sigma) V^T.
inline Eigen::MatrixXd siegel_log0(const Eigen::MatrixXd& w, SiegelDiag* diag = nullptr) {
    auto dec = svd(w);
    const Eigen::VectorXd s = detail::clamped_artanh_sigma(dec.singular_values, diag);
    return dec.u * s.asDiagonal() * dec.v.transpose();
}

// Pull-back of the origin log map through the Mobius isometry.
inline Eigen::MatrixXd siegel_log(const Eigen::MatrixXd& base, const Eigen::MatrixXd& w,
                                  SiegelDiag* diag = nullptr) {
    if (base.isZero(0.0)) {
        return siegel_log0(w, diag);
    }
    const Eigen::Index n = base.rows();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd left = spd_fn((eye - base * base.transpose()).eval(), SpdFn::Sqrt);
    const Eigen::MatrixXd right = spd_fn((eye - base.transpose() * base).eval(), SpdFn::Sqrt);
    return left * siegel_log0(mobius_to_origin(base, w), diag) * right;
}

// Geodesic distance: sqrt(sum artanh^2 sigma_i) over singular values of
// mobius_to_origin(a, b).
inline double siegel_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              SiegelDiag* diag = nullptr) {
    const Eigen::MatrixXd t = mobius_to_origin(a, b);
    const Eigen::VectorXd s = detail::clamped_artanh_sigma(svd(t).singular_values, diag);
    return s.norm();
}

// Tangent coordinates in the origin chart, flattened row-major; the
// Euclidean norm equals siegel_distance(base, w).
inline Eigen::VectorXd siegel_tangent_vector(const Eigen::MatrixXd& base, const Eigen::MatrixXd& w,
                                             SiegelDiag* diag = nullptr) {
    const Eigen::MatrixXd t = base.isZero(0.0) ? siegel_log0(w, diag)
                                               : siegel_log0(mobius_to_origin(base, w), diag);
    const Eigen::Index n = t.rows();
    Eigen::VectorXd out(n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i * n + j) = t(i, j);
    return out;
}

}  // namespace btacm
