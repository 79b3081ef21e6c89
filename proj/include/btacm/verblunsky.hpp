#pragma once

// Recursive transform from a Block-Toeplitz SPD covariance to one SPD matrix
// plus p-1 Siegel-disk coefficient matrices, and the Kahler potential of the
// Block-Toeplitz SPD manifold.

#include <Eigen/Dense>
#include <vector>

#include "btacm/acm.hpp"
#include "btacm/errors.hpp"

namespace btacm {

// (P_0, Omega_1, ..., Omega_{p-1}): the image of the augmented covariance in
// SPD_d x SD_d^{p-1}.
struct BTDecomposition {
    Eigen::MatrixXd p0;                   // d x d SPD
    std::vector<Eigen::MatrixXd> omegas;  // p-1 Siegel-disk matrices, d x d
    int d = 0;
    int p = 0;
    int tau = 0;
};

struct SchurTerms {
    Eigen::MatrixXd L;  // SPD for SPD input
    Eigen::MatrixXd K;  // SPD for SPD input
    Eigen::MatrixXd M;
};

// Level-l companion terms. With G the leading l*d x l*d submatrix of the
// assembled block-Toeplitz matrix, B = (Gamma_l, ..., Gamma_1) its bottom
// block-row border and C = (Gamma_1; ...; Gamma_l) its left block-column
// border:
//   L = Gamma_0 - B G^{-1} B^T     (forward prediction-error covariance)
//   K = Gamma_0 - C^T G^{-1} C     (backward prediction-error covariance)
//   M = B G^{-1} C                 (one-step prediction of Gamma_{l+1})
// The borders enter in matrix position order; for L and K the ordering
// cancels by symmetry of G, but M needs it to reduce to the Levinson-Durbin
// recursion at d = 1. Level 0 returns L = K = Gamma_0 and M = 0.
SchurTerms schur_terms(const LaggedBlocks& blocks, int level);

// Omega_{l+1} = L_l^{-1/2} (Gamma_{l+1} - M_l) K_l^{-1/2} for l = 0..p-2,
// with P_0 = Gamma_0. Every output satisfies the Siegel membership margin;
// a violation signals a non-SPD input and raises DecompositionError.
BTDecomposition verblunsky_decompose(const LaggedBlocks& blocks);

// Same transform reusing an incrementally grown Cholesky factor across
// levels instead of refactoring each leading submatrix. Agrees with
// verblunsky_decompose to tight tolerance; kept as the optimized path.
BTDecomposition verblunsky_decompose_fast(const LaggedBlocks& blocks);

// Phi = -log det(Gamma_Aug) - log(pi e), from the spectrum.
double kahler_potential(const AugmentedCovariance& acm);

}  // namespace btacm
