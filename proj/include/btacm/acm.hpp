#pragma once

// Delay embedding, lagged covariance estimation, OAS shrinkage, and assembly
// of the Block-Toeplitz augmented covariance matrix.

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "btacm/errors.hpp"
#include "btacm/signal.hpp"

namespace btacm {

struct EmbeddingParams {
    int p = 1;    // embedding order
    int tau = 1;  // embedding delay, samples
};

// Validates 1 <= p, 1 <= tau and (p-1)*tau < T.
void validate_embedding(const EmbeddingParams& params, int T);

struct LaggedBlocks {
    std::vector<Eigen::MatrixXd> blocks;  // Gamma_0 .. Gamma_{p-1}, each d x d
    int d = 0;
    int p = 0;
    int tau = 0;
};

struct AugmentedCovariance {
    Eigen::MatrixXd matrix;  // dp x dp, SPD
    LaggedBlocks blocks;     // the (shrunk) block diagonals of `matrix`
    double shrinkage_rho = 0.0;
};

enum class AcmMode { Lagged, Embed };

// Phase-space reconstruction: row-block k holds the signal delayed by
// k*tau; columns range over n = (p-1)*tau .. T-1.
Eigen::MatrixXd delay_embed(const Epoch& epoch, const EmbeddingParams& params);

// Biased lagged covariance (1/T) sum_{t=lag}^{T-1} x(t) x(t-lag)^T of a
// centered epoch. The 1/T normalization makes the block-Toeplitz assembly
// positive semidefinite.
Eigen::MatrixXd lagged_cov(const Epoch& centered, int lag);

// Oracle Approximating Shrinkage toward mu I. Returns the shrunk matrix and
// the shrinkage weight rho in [0, 1].
std::pair<Eigen::MatrixXd, double> oas_shrink(const Eigen::MatrixXd& s, int n_samples);

// Block-Toeplitz matrix with block (i,j) = blocks[i-j] (transposed when i<j).
Eigen::MatrixXd assemble_block_toeplitz(const LaggedBlocks& blocks);

// Full augmented covariance. Lagged mode (the default pipeline) assembles
// Gamma_k = lagged_cov(epoch, k*tau) and OAS-shrinks the dp x dp matrix with
// n_samples = T - (p-1)*tau. Embed mode takes the autocovariance of the
// delay-embedded signal, shrinks it, and projects back to block-Toeplitz by
// averaging along block diagonals; it exists as a cross-check.
AugmentedCovariance build_acm(const Epoch& epoch, const EmbeddingParams& params,
                              AcmMode mode = AcmMode::Lagged);

// Blocks-only equivalent of lagged-mode build_acm; skips assembling the full
// matrix, computing the OAS statistics from the block norms instead. Used on
// the hot path where only the Verblunsky decomposition is needed.
LaggedBlocks shrunk_lagged_blocks(const Epoch& epoch, const EmbeddingParams& params,
                                  double* rho_out = nullptr);

// Plain sample covariance of the delay-embedded signal (no shrinkage), with
// an eps*I repair only if the result is not positive definite. This is the
// estimator of the full-matrix ACM baseline pipeline.
Eigen::MatrixXd acm_sample(const Epoch& epoch, const EmbeddingParams& params);

}  // namespace btacm
