#pragma once

// Shared generators for seeded random test inputs.

#include <Eigen/Dense>

#include "btacm/rng.hpp"

namespace btacm::testing {

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
    return m;
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, int n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, n, n));
    Eigen::MatrixXd q = qr.householderQ();
    return q;
}

// G G^T + eps I: generic SPD with spread eigenvalues.
inline Eigen::MatrixXd random_spd(Rng& rng, int n, double eps = 0.1) {
    Eigen::MatrixXd g = random_matrix(rng, n, n);
    return g * g.transpose() + eps * Eigen::MatrixXd::Identity(n, n);
}

// Contraction: operator norm strictly below `radius`.
inline Eigen::MatrixXd random_siegel(Rng& rng, int n, double radius = 0.8) {
    Eigen::MatrixXd m = random_matrix(rng, n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const double smax = svd.singularValues()(0);
    return m * (radius * (0.2 + 0.8 * rng.uniform()) / smax);
}

}  // namespace btacm::testing
