#pragma once

// Affine-invariant Riemannian geometry on SPD matrices: distance, exp/log
// maps, Frechet mean, and the whitened tangent vectorization used for
// classification.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "btacm/errors.hpp"
#include "btacm/matfun.hpp"

namespace btacm {

template <typename Scalar>
struct SpdTangent {
    MatrixX<Scalar> base;  // SPD base point
    MatrixX<Scalar> v;     // symmetric tangent matrix
};

namespace detail {

// Eigenvalues of base^{-1/2} p base^{-1/2}, with positivity enforced.
template <typename Scalar>
VectorX<Scalar> whitened_eigenvalues(const MatrixX<Scalar>& base, const MatrixX<Scalar>& p) {
    const MatrixX<Scalar> w = spd_fn(base, SpdFn::InvSqrt);
    auto eig = sym_eig((w * p * w).eval());
    const Scalar lmax = eig.eigenvalues(eig.eigenvalues.size() - 1);
    if (eig.eigenvalues(0) <= eps_pd(lmax)) {
        throw NotPositiveDefinite("spd: second argument not positive definite relative to base");
    }
    return eig.eigenvalues;
}

inline void check_square_same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* who) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw ShapeError(std::string(who) + ": dimension mismatch");
    }
}

}  // namespace detail

// Affine-invariant distance: sqrt(sum log^2 lambda_i) over eigenvalues of
// a^{-1/2} b a^{-1/2}.
inline double spd_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    detail::check_square_same(a, b, "spd_distance");
    const Eigen::VectorXd lambda = detail::whitened_eigenvalues<double>(a, b);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double l = std::log(lambda(i));
        acc += l * l;
    }
    return std::sqrt(acc);
}

inline SpdTangent<double> spd_log(const Eigen::MatrixXd& base, const Eigen::MatrixXd& p) {
    detail::check_square_same(base, p, "spd_log");
    const Eigen::MatrixXd s = spd_fn(base, SpdFn::Sqrt);
    const Eigen::MatrixXd w = spd_fn(base, SpdFn::InvSqrt);
    const Eigen::MatrixXd middle = spd_fn((w * p * w).eval(), SpdFn::Log);
    return SpdTangent<double>{base, symmetrize(s * middle * s)};
}

inline Eigen::MatrixXd spd_exp(const SpdTangent<double>& t) {
    detail::check_square_same(t.base, t.v, "spd_exp");
    const Eigen::MatrixXd s = spd_fn(t.base, SpdFn::Sqrt);
    const Eigen::MatrixXd w = spd_fn(t.base, SpdFn::InvSqrt);
    const Eigen::MatrixXd middle = spd_fn((w * t.v * w).eval(), SpdFn::Exp);
    return symmetrize(s * middle * s);
}

// Karcher fixed-point iteration, initialized at the arithmetic mean.
// Stops when the Frobenius norm of the mean log drops to 1e-7 * dim.
inline Eigen::MatrixXd frechet_mean(const std::vector<Eigen::MatrixXd>& points) {
    if (points.empty()) {
        throw InvalidInput("frechet_mean: empty input");
    }
    const Eigen::Index n = points[0].rows();
    for (const auto& p : points) {
        if (p.rows() != n || p.cols() != n) {
            throw ShapeError("frechet_mean: dimension mismatch");
        }
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (const auto& p : points) m += p;
    m /= static_cast<double>(points.size());
    m = symmetrize(m);

    const double tol = 1e-7 * static_cast<double>(n);
    double residual = 0.0;
    for (int it = 0; it < 50; ++it) {
        const Eigen::MatrixXd s = spd_fn(m, SpdFn::Sqrt);
        const Eigen::MatrixXd w = spd_fn(m, SpdFn::InvSqrt);
        Eigen::MatrixXd mean_log = Eigen::MatrixXd::Zero(n, n);
        for (const auto& p : points) {
            mean_log += spd_fn((w * p * w).eval(), SpdFn::Log);
        }
        mean_log /= static_cast<double>(points.size());
        residual = mean_log.norm();
        if (residual <= tol) {
            return m;
        }
        m = symmetrize(s * spd_fn(mean_log, SpdFn::Exp) * s);
    }
    throw ConvergenceError("frechet_mean: no convergence after 50 iterations", residual);
}

// log(W p W) vectorized as the upper triangle, row-major, off-diagonals
// scaled by sqrt(2). With W = base^{-1/2} the Euclidean norm equals
// spd_distance(base, p); callers that map many points precompute W once.
inline Eigen::VectorXd whitened_log_vector(const Eigen::MatrixXd& whitener, const Eigen::MatrixXd& p) {
    const Eigen::MatrixXd t = spd_fn((whitener * p * whitener).eval(), SpdFn::Log);
    const Eigen::Index n = t.rows();
    Eigen::VectorXd out(n * (n + 1) / 2);
    const double root2 = std::sqrt(2.0);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        out(k++) = t(i, i);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            out(k++) = root2 * t(i, j);
        }
    }
    return out;
}

inline Eigen::VectorXd spd_tangent_vector(const Eigen::MatrixXd& base, const Eigen::MatrixXd& p) {
    detail::check_square_same(base, p, "spd_tangent_vector");
    return whitened_log_vector(spd_fn(base, SpdFn::InvSqrt), p);
}

}  // namespace btacm
