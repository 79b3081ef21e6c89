#include "btacm/verblunsky.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "btacm/matfun.hpp"
#include "btacm/siegel.hpp"

namespace btacm {

namespace {

// Leading l*d x l*d block-Toeplitz submatrix.
Eigen::MatrixXd leading_submatrix(const LaggedBlocks& blocks, int l) {
    const int d = blocks.d;
    Eigen::MatrixXd g(l * d, l * d);
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
            if (i >= j) {
                g.block(i * d, j * d, d, d) = blocks.blocks[i - j];
            } else {
                g.block(i * d, j * d, d, d) = blocks.blocks[j - i].transpose();
            }
        }
    }
    return g;
}

// Bottom border of the leading (l+1)-block submatrix: the d x l*d block row
// (Gamma_l, Gamma_{l-1}, ..., Gamma_1).
Eigen::MatrixXd bottom_border(const LaggedBlocks& blocks, int l) {
    const int d = blocks.d;
    Eigen::MatrixXd b(d, l * d);
    for (int j = 0; j < l; ++j) {
        b.middleCols(j * d, d) = blocks.blocks[l - j];
    }
    return b;
}

// Left border: the l*d x d block column (Gamma_1; Gamma_2; ...; Gamma_l).
Eigen::MatrixXd left_border(const LaggedBlocks& blocks, int l) {
    const int d = blocks.d;
    Eigen::MatrixXd c(l * d, d);
    for (int i = 0; i < l; ++i) {
        c.middleRows(i * d, d) = blocks.blocks[i + 1];
    }
    return c;
}

void check_level(const LaggedBlocks& blocks, int level) {
    if (level < 0 || level > blocks.p - 1) {
        throw InvalidInput("schur_terms: level must lie in [0, p-1]");
    }
}

Eigen::MatrixXd next_omega(const SchurTerms& terms, const Eigen::MatrixXd& gamma_next) {
    const Eigen::MatrixXd li = spd_fn(terms.L, SpdFn::InvSqrt);
    const Eigen::MatrixXd ki = spd_fn(terms.K, SpdFn::InvSqrt);
    Eigen::MatrixXd omega = li * (gamma_next - terms.M) * ki;
    if (siegel_margin(omega) <= 0.0) {
        throw DecompositionError(
            "verblunsky: produced coefficient outside the Siegel disk (input not SPD?)");
    }
    return omega;
}

}  // namespace

SchurTerms schur_terms(const LaggedBlocks& blocks, int level) {
    check_level(blocks, level);
    const Eigen::MatrixXd gamma0 = symmetrize(blocks.blocks[0]);
    if (level == 0) {
        return SchurTerms{gamma0, gamma0, Eigen::MatrixXd::Zero(blocks.d, blocks.d)};
    }
    const Eigen::MatrixXd g = leading_submatrix(blocks, level);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
        throw IllConditioned("schur_terms: leading submatrix is singular or condition > 1e12");
    }
    const Eigen::MatrixXd b = bottom_border(blocks, level);
    const Eigen::MatrixXd c = left_border(blocks, level);
    const Eigen::MatrixXd gb = llt.solve(b.transpose());  // G^{-1} B^T
    const Eigen::MatrixXd gc = llt.solve(c);              // G^{-1} C

    SchurTerms out;
    out.L = symmetrize(gamma0 - b * gb);
    out.K = symmetrize(gamma0 - c.transpose() * gc);
    out.M = b * gc;
    return out;
}

BTDecomposition verblunsky_decompose(const LaggedBlocks& blocks) {
    if (blocks.p < 1 || blocks.blocks.size() != static_cast<std::size_t>(blocks.p)) {
        throw InvalidInput("verblunsky_decompose: inconsistent block count");
    }
    BTDecomposition dec;
    dec.d = blocks.d;
    dec.p = blocks.p;
    dec.tau = blocks.tau;
    dec.p0 = symmetrize(blocks.blocks[0]);
    dec.omegas.reserve(blocks.p - 1);
    for (int l = 0; l + 1 < blocks.p; ++l) {
        dec.omegas.push_back(next_omega(schur_terms(blocks, l), blocks.blocks[l + 1]));
    }
    return dec;
}

BTDecomposition verblunsky_decompose_fast(const LaggedBlocks& blocks) {
    if (blocks.p < 1 || blocks.blocks.size() != static_cast<std::size_t>(blocks.p)) {
        throw InvalidInput("verblunsky_decompose: inconsistent block count");
    }
    const int d = blocks.d;
    BTDecomposition dec;
    dec.d = d;
    dec.p = blocks.p;
    dec.tau = blocks.tau;
    dec.p0 = symmetrize(blocks.blocks[0]);
    dec.omegas.reserve(blocks.p - 1);
    if (blocks.p == 1) {
        return dec;
    }
    const Eigen::MatrixXd gamma0 = dec.p0;

    // Lower Cholesky factor of the leading l*d submatrix, grown one block
    // per level: appending d columns costs one triangular solve plus one
    // d x d factorization instead of refactoring from scratch.
    Eigen::MatrixXd chol;  // l*d x l*d, lower triangular
    for (int l = 0; l + 1 < blocks.p; ++l) {
        if (l >= 1) {
            const int m = (l - 1) * d;
            Eigen::MatrixXd grown(l * d, l * d);
            grown.setZero();
            if (m > 0) {
                grown.topLeftCorner(m, m) = chol;
                // new block column of the leading submatrix:
                // (Gamma_{l-1}^T; ...; Gamma_1^T)
                Eigen::MatrixXd col(m, d);
                for (int i = 0; i < l - 1; ++i) {
                    col.middleRows(i * d, d) = blocks.blocks[l - 1 - i].transpose();
                }
                const Eigen::MatrixXd b =
                    chol.triangularView<Eigen::Lower>().solve(col);  // m x d
                grown.block(m, 0, d, m) = b.transpose();
                const Eigen::MatrixXd corner = symmetrize(gamma0 - b.transpose() * b);
                Eigen::LLT<Eigen::MatrixXd> llt(corner);
                if (llt.info() != Eigen::Success) {
                    throw IllConditioned("verblunsky_decompose_fast: factor update failed");
                }
                grown.block(m, m, d, d) = llt.matrixL();
            } else {
                Eigen::LLT<Eigen::MatrixXd> llt(gamma0);
                if (llt.info() != Eigen::Success) {
                    throw IllConditioned("verblunsky_decompose_fast: Gamma_0 not positive definite");
                }
                grown = llt.matrixL();
            }
            chol = std::move(grown);
        }

        SchurTerms terms;
        if (l == 0) {
            terms = SchurTerms{gamma0, gamma0, Eigen::MatrixXd::Zero(d, d)};
        } else {
            const Eigen::MatrixXd wb = chol.triangularView<Eigen::Lower>().solve(
                bottom_border(blocks, l).transpose());
            const Eigen::MatrixXd wc =
                chol.triangularView<Eigen::Lower>().solve(left_border(blocks, l));
            terms.L = symmetrize(gamma0 - wb.transpose() * wb);
            terms.K = symmetrize(gamma0 - wc.transpose() * wc);
            terms.M = wb.transpose() * wc;
        }
        dec.omegas.push_back(next_omega(terms, blocks.blocks[l + 1]));
    }
    return dec;
}

double kahler_potential(const AugmentedCovariance& acm) {
    const auto eig = sym_eig(acm.matrix);
    const double lmax = eig.eigenvalues(eig.eigenvalues.size() - 1);
    if (eig.eigenvalues(0) <= eps_pd(lmax)) {
        throw NotPositiveDefinite("kahler_potential: matrix not positive definite");
    }
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        logdet += std::log(eig.eigenvalues(i));
    }
    return -logdet - std::log(M_PI * M_E);
}

}  // namespace btacm
