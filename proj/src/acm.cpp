#include "btacm/acm.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "btacm/matfun.hpp"

namespace btacm {

void validate_embedding(const EmbeddingParams& params, int T) {
    if (params.p < 1 || params.tau < 1) {
        throw InvalidConfig("embedding: p and tau must be >= 1");
    }
    if ((params.p - 1) * params.tau >= T) {
        throw EpochTooShort("embedding: (p-1)*tau must be smaller than the epoch length");
    }
}

Eigen::MatrixXd delay_embed(const Epoch& epoch, const EmbeddingParams& params) {
    const int d = static_cast<int>(epoch.data.rows());
    const int T = static_cast<int>(epoch.data.cols());
    validate_embedding(params, T);
    const int span = (params.p - 1) * params.tau;
    const int N = T - span;
    Eigen::MatrixXd out(d * params.p, N);
    for (int k = 0; k < params.p; ++k) {
        out.middleRows(k * d, d) = epoch.data.middleCols(span - k * params.tau, N);
    }
    return out;
}

Eigen::MatrixXd lagged_cov(const Epoch& centered, int lag) {
    const int T = static_cast<int>(centered.data.cols());
    if (lag < 0 || lag >= T) {
        throw InvalidLag("lagged_cov: lag must lie in [0, T)");
    }
    const int N = T - lag;
    return (centered.data.rightCols(N) * centered.data.leftCols(N).transpose()) /
           static_cast<double>(T);
}

std::pair<Eigen::MatrixXd, double> oas_shrink(const Eigen::MatrixXd& s, int n_samples) {
    if (s.rows() != s.cols()) {
        throw ShapeError("oas_shrink: matrix must be square");
    }
    if (n_samples < 2) {
        throw InvalidInput("oas_shrink: need n_samples >= 2");
    }
    const Eigen::MatrixXd sym = symmetrize(s);
    const double dim = static_cast<double>(sym.rows());
    const double tr = sym.trace();
    const double tr2 = sym.squaredNorm();  // trace(S^2) for symmetric S
    const double mu = tr / dim;

    const double num = (1.0 - 2.0 / dim) * tr2 + tr * tr;
    const double den = (n_samples + 1.0 - 2.0 / dim) * (tr2 - tr * tr / dim);
    double rho;
    if (den <= 1e-15 * tr * tr) {
        rho = 1.0;
    } else {
        rho = std::clamp(num / den, 0.0, 1.0);
    }
    Eigen::MatrixXd out = (1.0 - rho) * sym;
    out.diagonal().array() += rho * mu;
    return {std::move(out), rho};
}

Eigen::MatrixXd assemble_block_toeplitz(const LaggedBlocks& blocks) {
    const int d = blocks.d;
    const int p = blocks.p;
    Eigen::MatrixXd m(d * p, d * p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            if (i >= j) {
                m.block(i * d, j * d, d, d) = blocks.blocks[i - j];
            } else {
                m.block(i * d, j * d, d, d) = blocks.blocks[j - i].transpose();
            }
        }
    }
    return m;
}

namespace {

LaggedBlocks raw_lagged_blocks(const Epoch& centered, const EmbeddingParams& params) {
    LaggedBlocks out;
    out.d = static_cast<int>(centered.data.rows());
    out.p = params.p;
    out.tau = params.tau;
    out.blocks.reserve(params.p);
    for (int k = 0; k < params.p; ++k) {
        Eigen::MatrixXd g = lagged_cov(centered, k * params.tau);
        if (k == 0) g = symmetrize(g);
        out.blocks.push_back(std::move(g));
    }
    return out;
}

bool is_positive_definite(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

// Centered sample covariance (1/N) E E^T of the embedded signal.
Eigen::MatrixXd embedded_cov(const Epoch& centered, const EmbeddingParams& params) {
    Eigen::MatrixXd e = delay_embed(centered, params);
    e.colwise() -= e.rowwise().mean();
    return (e * e.transpose()) / static_cast<double>(e.cols());
}

}  // namespace

AugmentedCovariance build_acm(const Epoch& epoch, const EmbeddingParams& params, AcmMode mode) {
    const int T = static_cast<int>(epoch.data.cols());
    validate_embedding(params, T);
    const Epoch centered = center(epoch);
    const int n_samples = T - (params.p - 1) * params.tau;

    AugmentedCovariance acm;
    acm.blocks.d = static_cast<int>(epoch.data.rows());
    acm.blocks.p = params.p;
    acm.blocks.tau = params.tau;

    if (mode == AcmMode::Lagged) {
        const LaggedBlocks raw = raw_lagged_blocks(centered, params);
        auto [shrunk, rho] = oas_shrink(assemble_block_toeplitz(raw), n_samples);
        acm.shrinkage_rho = rho;
        const int d = acm.blocks.d;
        acm.blocks.blocks.reserve(params.p);
        for (int k = 0; k < params.p; ++k) {
            acm.blocks.blocks.push_back(shrunk.block(k * d, 0, d, d));
        }
        // Reassemble from the extracted blocks so equal-diagonal blocks are
        // bitwise copies of one another.
        acm.matrix = assemble_block_toeplitz(acm.blocks);
    } else {
        auto [shrunk, rho] = oas_shrink(embedded_cov(centered, params), n_samples);
        acm.shrinkage_rho = rho;
        const int d = acm.blocks.d;
        const int p = params.p;
        // Toeplitz projection: average the blocks of each block diagonal.
        acm.blocks.blocks.reserve(p);
        for (int k = 0; k < p; ++k) {
            Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(d, d);
            for (int j = 0; j + k < p; ++j) {
                avg += shrunk.block((j + k) * d, j * d, d, d);
            }
            avg /= static_cast<double>(p - k);
            if (k == 0) avg = symmetrize(avg);
            acm.blocks.blocks.push_back(std::move(avg));
        }
        acm.matrix = assemble_block_toeplitz(acm.blocks);
    }

    if (!is_positive_definite(acm.matrix)) {
        throw NotPositiveDefinite("build_acm: shrinkage did not produce a positive definite matrix");
    }
    return acm;
}

LaggedBlocks shrunk_lagged_blocks(const Epoch& epoch, const EmbeddingParams& params,
                                  double* rho_out) {
    const int T = static_cast<int>(epoch.data.cols());
    validate_embedding(params, T);
    const Epoch centered = center(epoch);
    LaggedBlocks raw = raw_lagged_blocks(centered, params);

    // OAS statistics of the assembled dp x dp matrix, computed from the
    // blocks: trace = p tr(Gamma_0), |S|_F^2 = p |Gamma_0|_F^2 +
    // sum_k 2 (p-k) |Gamma_k|_F^2.
    const double dim = static_cast<double>(raw.d * raw.p);
    const double tr = static_cast<double>(raw.p) * raw.blocks[0].trace();
    double tr2 = static_cast<double>(raw.p) * raw.blocks[0].squaredNorm();
    for (int k = 1; k < raw.p; ++k) {
        tr2 += 2.0 * static_cast<double>(raw.p - k) * raw.blocks[k].squaredNorm();
    }
    const double mu = tr / dim;
    const int n_samples = T - (params.p - 1) * params.tau;
    const double num = (1.0 - 2.0 / dim) * tr2 + tr * tr;
    const double den = (n_samples + 1.0 - 2.0 / dim) * (tr2 - tr * tr / dim);
    double rho;
    if (den <= 1e-15 * tr * tr) {
        rho = 1.0;
    } else {
        rho = std::clamp(num / den, 0.0, 1.0);
    }
    for (auto& g : raw.blocks) g *= (1.0 - rho);
    raw.blocks[0].diagonal().array() += rho * mu;
    if (rho_out) *rho_out = rho;
    return raw;
}

Eigen::MatrixXd acm_sample(const Epoch& epoch, const EmbeddingParams& params) {
    const int T = static_cast<int>(epoch.data.cols());
    validate_embedding(params, T);
    Eigen::MatrixXd s = embedded_cov(center(epoch), params);
    if (!is_positive_definite(s)) {
        const double eps = 1e-10 * s.trace() / static_cast<double>(s.rows());
        const double lmin = sym_eig(s).eigenvalues(0);
        s.diagonal().array() += eps - lmin;
        if (!is_positive_definite(s)) {
            throw NotPositiveDefinite("acm_sample: repair failed to restore definiteness");
        }
    }
    return s;
}

}  // namespace btacm
