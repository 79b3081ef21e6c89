#include <cmath>

#include "btacm/acm.hpp"
#include "btacm/matfun.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace btacm;
using Eigen::MatrixXd;

namespace {

Epoch make_epoch(std::initializer_list<double> samples) {
    Epoch e;
    e.data.resize(1, static_cast<Eigen::Index>(samples.size()));
    Eigen::Index t = 0;
    for (double v : samples) e.data(0, t++) = v;
    return e;
}

Epoch random_epoch(Rng& rng, int d, int T) {
    Epoch e;
    e.data = testing::random_matrix(rng, d, T);
    return e;
}

// Stationary AR epochs with channel mixing; long versions estimate
// population quantities well.
Epoch ar_epoch(Rng& rng, int d, int T) {
    Eigen::MatrixXd mix = testing::random_matrix(rng, d, d) / std::sqrt(double(d));
    Eigen::MatrixXd z(d, T);
    for (int i = 0; i < d; ++i) {
        const double a = i % 2 == 0 ? 0.55 : -0.35;
        const double innov = std::sqrt(1.0 - a * a);
        z(i, 0) = rng.gaussian();
        for (int t = 1; t < T; ++t) z(i, t) = a * z(i, t - 1) + innov * rng.gaussian();
    }
    Epoch e;
    e.data = mix * z;
    return e;
}

}  // namespace

TEST_CASE("delay_embed hand example and shapes") {
    const Epoch e = make_epoch({1, 2, 3, 4, 5});
    const MatrixXd m = delay_embed(e, EmbeddingParams{2, 1});
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 4);
    MatrixXd expect(2, 4);
    expect << 2, 3, 4, 5, 1, 2, 3, 4;
    CHECK((m - expect).norm() == 0.0);

    // p = 1 leaves the epoch unchanged
    const MatrixXd same = delay_embed(e, EmbeddingParams{1, 3});
    CHECK((same - e.data).norm() == 0.0);

    Rng rng(3);
    const Epoch e2 = random_epoch(rng, 2, 10);
    CHECK(delay_embed(e2, EmbeddingParams{2, 3}).rows() == 4);
    CHECK(delay_embed(e2, EmbeddingParams{2, 3}).cols() == 7);

    CHECK_THROWS_AS(delay_embed(e, EmbeddingParams{3, 3}), EpochTooShort);
    CHECK_THROWS_AS(delay_embed(e, EmbeddingParams{0, 1}), InvalidConfig);
}

TEST_CASE("lagged_cov definition and hand value") {
    Rng rng(5);
    const Epoch e = center(random_epoch(rng, 3, 64));
    const MatrixXd g0 = lagged_cov(e, 0);
    const MatrixXd expect = (e.data * e.data.transpose()) / 64.0;
    CHECK((g0 - expect).norm() <= 1e-14);

    const Epoch alt = make_epoch({1, -1, 1, -1});
    CHECK(lagged_cov(alt, 1)(0, 0) == doctest::Approx(-0.75).epsilon(1e-15));

    CHECK_THROWS_AS(lagged_cov(alt, 4), InvalidLag);
    CHECK_THROWS_AS(lagged_cov(alt, -1), InvalidLag);

    // single-term tail lag shrinks toward zero
    const Epoch w = center(random_epoch(rng, 2, 32));
    CHECK(lagged_cov(w, 31).norm() <= lagged_cov(w, 0).norm());
}

TEST_CASE("d=1 lagged blocks match a direct convolution oracle") {
    Rng rng(7);
    Epoch e = center(random_epoch(rng, 1, 128));
    const auto& x = e.data;
    for (int lag = 0; lag < 6; ++lag) {
        double acc = 0.0;
        for (int t = lag; t < 128; ++t) acc += x(0, t) * x(0, t - lag);
        acc /= 128.0;
        CHECK(lagged_cov(e, lag)(0, 0) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("oas_shrink fixed point and hand value") {
    const MatrixXd eye = MatrixXd::Identity(2, 2);
    const auto [shrunk_eye, rho_eye] = oas_shrink(eye, 5);
    CHECK((shrunk_eye - eye).norm() <= 1e-15);

    MatrixXd s(2, 2);
    s << 2, 0, 0, 0;
    const auto [shrunk, rho] = oas_shrink(s, 5);
    CHECK(rho == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(shrunk(0, 0) == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(shrunk(1, 1) == doctest::Approx(0.4).epsilon(1e-12));

    CHECK_THROWS_AS(oas_shrink(s, 1), InvalidInput);
}

TEST_CASE("oas_shrink lifts the minimum eigenvalue of PSD input") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        Eigen::MatrixXd g = testing::random_matrix(rng, n, 2 * n);
        Eigen::MatrixXd s = g * g.transpose() / double(2 * n);  // PSD
        const auto [shrunk, rho] = oas_shrink(s, 2 * n);
        const double mu = s.trace() / n;
        const double lmin = sym_eig(shrunk).eigenvalues(0);
        CHECK(lmin >= rho * mu - 1e-12);
        CHECK(lmin > 0.0);
    }
}

TEST_CASE("build_acm p=1 is the shrunk spatial covariance") {
    Rng rng(13);
    const Epoch e = random_epoch(rng, 3, 100);
    const AugmentedCovariance acm = build_acm(e, EmbeddingParams{1, 1});
    const Epoch c = center(e);
    const auto [expect, rho] = oas_shrink(lagged_cov(c, 0), 100);
    CHECK((acm.matrix - expect).norm() <= 1e-14);
    CHECK(acm.shrinkage_rho == doctest::Approx(rho));
}

TEST_CASE("build_acm block-Toeplitz structure is bit exact") {
    Rng rng(17);
    const Epoch e = random_epoch(rng, 2, 200);
    const AugmentedCovariance acm = build_acm(e, EmbeddingParams{4, 2});
    const int d = 2;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const MatrixXd expect = i >= j
                                        ? acm.blocks.blocks[i - j]
                                        : MatrixXd(acm.blocks.blocks[j - i].transpose());
            CHECK((acm.matrix.block(i * d, j * d, d, d) - expect).norm() == 0.0);
        }
    }
    // block (2,0) == block (3,1) bitwise
    CHECK((acm.matrix.block(2 * d, 0, d, d) - acm.matrix.block(3 * d, 1 * d, d, d)).norm() == 0.0);
}

TEST_CASE("pre-shrinkage lagged assembly is PSD on seeded epochs") {
    Rng rng(19);
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const int T = 32 + static_cast<int>(rng.below(64));
        const Epoch e = center(random_epoch(rng, d, T));
        const int p = 2 + static_cast<int>(rng.below(3));
        const int tau = 1 + static_cast<int>(rng.below(2));
        if ((p - 1) * tau >= T) continue;
        LaggedBlocks blocks;
        blocks.d = d;
        blocks.p = p;
        blocks.tau = tau;
        for (int k = 0; k < p; ++k) {
            blocks.blocks.push_back(k == 0 ? MatrixXd(symmetrize(lagged_cov(e, 0)))
                                           : lagged_cov(e, k * tau));
        }
        const MatrixXd m = assemble_block_toeplitz(blocks);
        const double lmin = sym_eig(m).eigenvalues(0);
        CHECK(lmin >= -1e-10 * m.trace());
    }
}

TEST_CASE("build_acm sign-flip conjugation invariance") {
    Rng rng(23);
    const Epoch e = random_epoch(rng, 3, 150);
    Epoch flipped = e;
    Eigen::VectorXd signs(3);
    signs << 1, -1, 1;
    flipped.data = signs.asDiagonal() * e.data;

    const EmbeddingParams params{3, 2};
    const AugmentedCovariance a = build_acm(e, params);
    const AugmentedCovariance b = build_acm(flipped, params);
    // conjugate by the block-diagonal sign matrix
    Eigen::VectorXd big(9);
    big << signs, signs, signs;
    const MatrixXd expected = big.asDiagonal() * a.matrix * big.asDiagonal();
    CHECK((b.matrix - expected).norm() <= 1e-12 * a.matrix.norm());
}

TEST_CASE("lagged and embed modes agree on long stationary epochs") {
    Rng rng(29);
    const Epoch e = ar_epoch(rng, 3, 4096);
    const EmbeddingParams params{3, 2};
    const AugmentedCovariance lagged = build_acm(e, params, AcmMode::Lagged);
    const AugmentedCovariance embed = build_acm(e, params, AcmMode::Embed);
    const double rel = (lagged.matrix - embed.matrix).norm() / lagged.matrix.norm();
    CHECK(rel <= 0.05);
}

TEST_CASE("shrunk_lagged_blocks matches build_acm") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(4));
        const Epoch e = random_epoch(rng, d, 128);
        const int p = 1 + static_cast<int>(rng.below(5));
        const EmbeddingParams params{p, 2};
        double rho = 0.0;
        const LaggedBlocks fast = shrunk_lagged_blocks(e, params, &rho);
        const AugmentedCovariance ref = build_acm(e, params);
        CHECK(std::abs(rho - ref.shrinkage_rho) <= 1e-13);
        for (int k = 0; k < p; ++k) {
            CHECK((fast.blocks[k] - ref.blocks.blocks[k]).norm() <=
                  1e-13 * std::max(1.0, ref.blocks.blocks[k].norm()));
        }
        // p=1 must agree bitwise (the ts-svm / bt-acm reduction depends on it)
        if (p == 1) {
            CHECK((fast.blocks[0] - ref.blocks.blocks[0]).norm() == 0.0);
        }
    }
}

TEST_CASE("acm_sample is SPD and matches the embedded covariance") {
    Rng rng(37);
    const Epoch e = random_epoch(rng, 3, 200);
    const EmbeddingParams params{4, 2};
    const MatrixXd s = acm_sample(e, params);
    REQUIRE(s.rows() == 12);
    CHECK(sym_eig(s).eigenvalues(0) > 0.0);
    // matches centered embedded covariance when already definite
    Eigen::MatrixXd emb = delay_embed(center(e), params);
    emb.colwise() -= emb.rowwise().mean();
    const MatrixXd expect = emb * emb.transpose() / double(emb.cols());
    CHECK((s - expect).norm() <= 1e-12 * expect.norm());
}
