#include <cmath>
#include <vector>

#include "btacm/acm.hpp"
#include "btacm/matfun.hpp"
#include "btacm/siegel.hpp"
#include "btacm/verblunsky.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace btacm;
using Eigen::MatrixXd;

namespace {

// Independent oracle: Levinson-Durbin reflection coefficients of a scalar
// autocovariance sequence r_0..r_m. Kept free of any library code beyond
// plain arithmetic.
std::vector<double> levinson_reflections(const std::vector<double>& r) {
    const int m = static_cast<int>(r.size()) - 1;
    std::vector<double> a(m + 1, 0.0), prev(m + 1, 0.0), k(m + 1, 0.0);
    double err = r[0];
    for (int order = 1; order <= m; ++order) {
        double acc = r[order];
        for (int i = 1; i < order; ++i) acc -= prev[i] * r[order - i];
        k[order] = acc / err;
        a[order] = k[order];
        for (int i = 1; i < order; ++i) a[i] = prev[i] - k[order] * prev[order - i];
        err *= (1.0 - k[order] * k[order]);
        prev = a;
    }
    return {k.begin() + 1, k.end()};
}

LaggedBlocks scalar_blocks(const std::vector<double>& r) {
    LaggedBlocks blocks;
    blocks.d = 1;
    blocks.p = static_cast<int>(r.size());
    blocks.tau = 1;
    for (double v : r) {
        MatrixXd m(1, 1);
        m << v;
        blocks.blocks.push_back(m);
    }
    return blocks;
}

// Autocovariance of a random finite impulse response: always PSD Toeplitz.
std::vector<double> random_autocov(Rng& rng, int p) {
    const int len = p + 4 + static_cast<int>(rng.below(8));
    std::vector<double> h(len);
    for (double& v : h) v = rng.gaussian();
    std::vector<double> r(p);
    for (int lag = 0; lag < p; ++lag) {
        double acc = 0.0;
        for (int t = lag; t < len; ++t) acc += h[t] * h[t - lag];
        r[lag] = acc;
    }
    return r;
}

LaggedBlocks epoch_blocks(Rng& rng, int d, int p, int tau, int T = 256) {
    Epoch e;
    Eigen::MatrixXd mix = testing::random_matrix(rng, d, d) / std::sqrt(double(d));
    Eigen::MatrixXd z(d, T);
    for (int i = 0; i < d; ++i) {
        const double a = -0.6 + 1.2 * rng.uniform();
        const double innov = std::sqrt(1.0 - a * a);
        z(i, 0) = rng.gaussian();
        for (int t = 1; t < T; ++t) z(i, t) = a * z(i, t - 1) + innov * rng.gaussian();
    }
    e.data = mix * z;
    return shrunk_lagged_blocks(e, EmbeddingParams{p, tau});
}

}  // namespace

TEST_CASE("schur_terms level 0 and scalar level 1") {
    const LaggedBlocks blocks = scalar_blocks({1.0, 0.5, 0.25});
    const SchurTerms t0 = schur_terms(blocks, 0);
    CHECK(t0.L(0, 0) == doctest::Approx(1.0));
    CHECK(t0.K(0, 0) == doctest::Approx(1.0));
    CHECK(t0.M(0, 0) == doctest::Approx(0.0));

    const SchurTerms t1 = schur_terms(blocks, 1);
    CHECK(t1.L(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(t1.K(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(t1.M(0, 0) == doctest::Approx(0.25).epsilon(1e-14));

    CHECK_THROWS_AS(schur_terms(blocks, 3), InvalidInput);
}

TEST_CASE("schur L and K stay SPD on seeded SPD inputs") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const int p = 2 + static_cast<int>(rng.below(4));
        const LaggedBlocks blocks = epoch_blocks(rng, d, p, 1);
        for (int l = 0; l <= p - 1; ++l) {
            const SchurTerms t = schur_terms(blocks, l);
            CHECK(sym_eig(t.L).eigenvalues(0) > 0.0);
            CHECK(sym_eig(t.K).eigenvalues(0) > 0.0);
        }
    }
}

TEST_CASE("verblunsky AR(1) closed form") {
    const LaggedBlocks blocks = scalar_blocks({1.0, 0.5, 0.25, 0.125, 0.0625});
    const BTDecomposition dec = verblunsky_decompose(blocks);
    REQUIRE(dec.omegas.size() == 4);
    CHECK(dec.p0(0, 0) == doctest::Approx(1.0));
    CHECK(dec.omegas[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    for (int l = 1; l < 4; ++l) {
        CHECK(std::abs(dec.omegas[l](0, 0)) <= 1e-10);
    }
}

TEST_CASE("verblunsky of a white process is all zeros") {
    LaggedBlocks blocks;
    blocks.d = 2;
    blocks.p = 4;
    blocks.tau = 1;
    Rng rng(43);
    blocks.blocks.push_back(testing::random_spd(rng, 2));
    for (int k = 1; k < 4; ++k) blocks.blocks.push_back(MatrixXd::Zero(2, 2));
    const BTDecomposition dec = verblunsky_decompose(blocks);
    for (const auto& omega : dec.omegas) {
        CHECK(omega.norm() == 0.0);
    }
}

TEST_CASE("verblunsky p=1 yields no omegas") {
    Rng rng(44);
    LaggedBlocks blocks;
    blocks.d = 3;
    blocks.p = 1;
    blocks.tau = 1;
    blocks.blocks.push_back(testing::random_spd(rng, 3));
    const BTDecomposition dec = verblunsky_decompose(blocks);
    CHECK(dec.omegas.empty());
    CHECK((dec.p0 - blocks.blocks[0]).norm() <= 1e-15 * blocks.blocks[0].norm());
}

TEST_CASE("d=1 equivalence with the Levinson-Durbin oracle") {
    Rng rng(47);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 2 + static_cast<int>(rng.below(8));
        const std::vector<double> r = random_autocov(rng, p);
        const std::vector<double> k = levinson_reflections(r);
        const BTDecomposition dec = verblunsky_decompose(scalar_blocks(r));
        REQUIRE(dec.omegas.size() == k.size());
        for (std::size_t l = 0; l < k.size(); ++l) {
            CHECK(std::abs(dec.omegas[l](0, 0) - k[l]) <= 1e-8);
        }
    }
}

TEST_CASE("membership: every omega lies strictly inside the disk") {
    Rng rng(53);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + static_cast<int>(rng.below(3));
        const int p = 2 + static_cast<int>(rng.below(5));
        const LaggedBlocks blocks = epoch_blocks(rng, d, p, 1 + static_cast<int>(rng.below(2)));
        const BTDecomposition dec = verblunsky_decompose(blocks);
        for (const auto& omega : dec.omegas) {
            CHECK(siegel_margin(omega) > 0.0);
        }
    }
}

TEST_CASE("Schur determinant identity across levels") {
    Rng rng(59);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const int p = 3 + static_cast<int>(rng.below(3));
        const LaggedBlocks blocks = epoch_blocks(rng, d, p, 1);
        auto leading = [&](int l) {
            LaggedBlocks sub = blocks;
            sub.p = l;
            sub.blocks.assign(blocks.blocks.begin(), blocks.blocks.begin() + l);
            return assemble_block_toeplitz(sub);
        };
        for (int l = 1; l <= p - 1; ++l) {
            const double lhs = leading(l + 1).determinant();
            const double rhs = leading(l).determinant() * schur_terms(blocks, l).L.determinant();
            CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(std::abs(lhs), std::abs(rhs)));
        }
    }
}

TEST_CASE("scaling invariance: omegas are homogeneous of degree zero") {
    Rng rng(61);
    const LaggedBlocks blocks = epoch_blocks(rng, 2, 4, 1);
    LaggedBlocks scaled = blocks;
    const double alpha = 3.7;
    for (auto& b : scaled.blocks) b *= alpha;
    const BTDecomposition a = verblunsky_decompose(blocks);
    const BTDecomposition b = verblunsky_decompose(scaled);
    CHECK((b.p0 - alpha * a.p0).norm() <= 1e-10 * a.p0.norm());
    for (std::size_t l = 0; l < a.omegas.size(); ++l) {
        CHECK((a.omegas[l] - b.omegas[l]).norm() <= 1e-10);
    }
}

TEST_CASE("perfectly predictable level yields a zero omega") {
    Rng rng(67);
    const LaggedBlocks blocks = epoch_blocks(rng, 2, 3, 1);
    // Overwrite Gamma_2 with M_1 so level 1 is exactly predictable.
    LaggedBlocks rigged = blocks;
    rigged.blocks[2] = schur_terms(blocks, 1).M;
    const BTDecomposition dec = verblunsky_decompose(rigged);
    CHECK(dec.omegas[1].norm() <= 1e-12);
}

TEST_CASE("fast path agrees with the per-level reference") {
    Rng rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(4));
        const int p = 2 + static_cast<int>(rng.below(6));
        const LaggedBlocks blocks = epoch_blocks(rng, d, p, 1);
        const BTDecomposition a = verblunsky_decompose(blocks);
        const BTDecomposition b = verblunsky_decompose_fast(blocks);
        CHECK((a.p0 - b.p0).norm() <= 1e-9);
        REQUIRE(a.omegas.size() == b.omegas.size());
        for (std::size_t l = 0; l < a.omegas.size(); ++l) {
            CHECK((a.omegas[l] - b.omegas[l]).norm() <= 1e-9);
        }
    }
}

TEST_CASE("ill-conditioned leading submatrix is rejected") {
    // Boundary case: |r_1| = r_0 makes the 2x2 Toeplitz matrix singular.
    const LaggedBlocks blocks = scalar_blocks({1.0, 1.0, 1.0});
    CHECK_THROWS_AS(verblunsky_decompose(blocks), Error);

    // condition above 1e12 without being exactly singular
    const LaggedBlocks nearly = scalar_blocks({1.0, 1.0 - 1e-14, 1.0 - 2e-14});
    CHECK_THROWS_AS(schur_terms(nearly, 2), IllConditioned);
}

TEST_CASE("kahler_potential values") {
    AugmentedCovariance acm;
    acm.matrix = MatrixXd::Identity(4, 4);
    CHECK(kahler_potential(acm) == doctest::Approx(-(1.0 + std::log(M_PI))).epsilon(1e-14));

    acm.matrix = 2.0 * MatrixXd::Identity(2, 2);
    CHECK(kahler_potential(acm) ==
          doctest::Approx(-2.0 * std::log(2.0) - (1.0 + std::log(M_PI))).epsilon(1e-12));

    Rng rng(73);
    const MatrixXd spd = testing::random_spd(rng, 5);
    acm.matrix = spd;
    const auto eig = sym_eig(spd);
    double logdet = 0.0;
    for (int i = 0; i < 5; ++i) logdet += std::log(eig.eigenvalues(i));
    CHECK(kahler_potential(acm) ==
          doctest::Approx(-logdet - std::log(M_PI * M_E)).epsilon(1e-9));

    acm.matrix = MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(kahler_potential(acm), NotPositiveDefinite);
}
