#include <cmath>

#include "btacm/siegel.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace btacm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd scalar(double x) {
    MatrixXd m(1, 1);
    m << x;
    return m;
}

}  // namespace

TEST_CASE("siegel_margin values") {
    CHECK(siegel_margin(MatrixXd::Zero(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(siegel_margin(scalar(0.6)) == doctest::Approx(0.64).epsilon(1e-12));
    Rng rng(3);
    const MatrixXd q = testing::random_orthogonal(rng, 4);
    CHECK(std::abs(siegel_margin(q)) <= 1e-12);
}

TEST_CASE("mobius_to_origin fixed points and scalar value") {
    Rng rng(5);
    const MatrixXd psi = testing::random_siegel(rng, 3);
    CHECK(mobius_to_origin(psi, psi).norm() <= 1e-12);

    const MatrixXd w = testing::random_siegel(rng, 3);
    CHECK((mobius_to_origin(MatrixXd::Zero(3, 3), w) - w).norm() <= 1e-12);

    CHECK(mobius_to_origin(scalar(0.5), scalar(0.75))(0, 0) ==
          doctest::Approx(0.4).epsilon(1e-12));

    // singular denominator only happens when w leaves the disk
    CHECK_THROWS_AS(mobius_to_origin(scalar(0.5), scalar(2.0)), NumericalError);
}

TEST_CASE("mobius_to_origin stays in the disk") {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const MatrixXd psi = testing::random_siegel(rng, n, 0.9);
        const MatrixXd w = testing::random_siegel(rng, n, 0.9);
        CHECK(siegel_margin(mobius_to_origin(psi, w)) > 0.0);
    }
}

TEST_CASE("siegel_log0 values") {
    CHECK(siegel_log0(MatrixXd::Zero(2, 2)).norm() <= 1e-15);
    CHECK(siegel_log0(scalar(0.5))(0, 0) == doctest::Approx(std::atanh(0.5)).epsilon(1e-12));

    // small-argument expansion: log0(w) = w + O(|w|^3)
    Rng rng(11);
    MatrixXd w = testing::random_matrix(rng, 3, 3);
    w *= 1e-4 / w.norm();
    CHECK((siegel_log0(w) - w).norm() <= 1e-11);
}

TEST_CASE("siegel_log0 geodesic re-exponentiation round trip") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const MatrixXd w = testing::random_siegel(rng, n, 0.95);
        const MatrixXd v = siegel_log0(w);
        const auto dec = svd(v);
        VectorXd tanh_s(dec.singular_values.size());
        for (Eigen::Index i = 0; i < tanh_s.size(); ++i) {
            tanh_s(i) = std::tanh(dec.singular_values(i));
        }
        const MatrixXd back = dec.u * tanh_s.asDiagonal() * dec.v.transpose();
        CHECK((back - w).norm() <= 1e-9);
    }
}

TEST_CASE("siegel_log0 clamp diagnostic") {
    SiegelDiag diag;
    MatrixXd w = MatrixXd::Identity(2, 2);  // on the boundary
    const MatrixXd v = siegel_log0(w, &diag);
    CHECK(diag.clamp_count == 2);
    CHECK(v.allFinite());
}

TEST_CASE("siegel_log scalar chain and base-zero reduction") {
    // base 0.5, w 0.75: T = 0.4, artanh(0.4) = 0.42365, scaled by (1-0.25)
    const MatrixXd v = siegel_log(scalar(0.5), scalar(0.75));
    CHECK(v(0, 0) == doctest::Approx(0.75 * std::atanh(0.4)).epsilon(1e-10));

    Rng rng(17);
    const MatrixXd base = testing::random_siegel(rng, 3);
    CHECK(siegel_log(base, base).norm() <= 1e-10);

    const MatrixXd w = testing::random_siegel(rng, 3);
    CHECK((siegel_log(MatrixXd::Zero(3, 3), w) - siegel_log0(w)).norm() == 0.0);
}

TEST_CASE("siegel_distance values and symmetry") {
    Rng rng(19);
    const MatrixXd w = testing::random_siegel(rng, 3);
    CHECK(siegel_distance(w, w) <= 1e-10);
    CHECK(siegel_distance(scalar(0.0), scalar(0.5)) ==
          doctest::Approx(std::atanh(0.5)).epsilon(1e-10));

    for (int trial = 0; trial < 50; ++trial) {
        const MatrixXd a = testing::random_siegel(rng, 3);
        const MatrixXd b = testing::random_siegel(rng, 3);
        CHECK(std::abs(siegel_distance(a, b) - siegel_distance(b, a)) <= 1e-9);
    }
}

TEST_CASE("siegel_distance isometry invariance under mobius maps") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(3));
        const MatrixXd psi = testing::random_siegel(rng, n, 0.85);
        const MatrixXd a = testing::random_siegel(rng, n, 0.85);
        const MatrixXd b = testing::random_siegel(rng, n, 0.85);
        const double before = siegel_distance(a, b);
        const double after = siegel_distance(mobius_to_origin(psi, a), mobius_to_origin(psi, b));
        CHECK(std::abs(before - after) <= 1e-8);
    }
}

TEST_CASE("siegel_distance triangle inequality") {
    Rng rng(29);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(3));
        const MatrixXd a = testing::random_siegel(rng, n);
        const MatrixXd b = testing::random_siegel(rng, n);
        const MatrixXd c = testing::random_siegel(rng, n);
        CHECK(siegel_distance(a, c) <=
              siegel_distance(a, b) + siegel_distance(b, c) + 1e-9);
    }
}

TEST_CASE("siegel_tangent_vector layout and isometry") {
    Rng rng(31);
    const MatrixXd base = testing::random_siegel(rng, 3);
    CHECK(siegel_tangent_vector(base, base).norm() <= 1e-10);

    const VectorXd v = siegel_tangent_vector(scalar(0.0), scalar(0.5));
    REQUIRE(v.size() == 1);
    CHECK(v(0) == doctest::Approx(std::atanh(0.5)).epsilon(1e-10));

    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(3));
        const MatrixXd a = testing::random_siegel(rng, n);
        const MatrixXd b = testing::random_siegel(rng, n);
        CHECK(std::abs(siegel_tangent_vector(a, b).norm() - siegel_distance(a, b)) <= 1e-9);
    }
}

TEST_CASE("all outputs stay real and finite on seeded inputs") {
    Rng rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const MatrixXd a = testing::random_siegel(rng, n, 0.95);
        const MatrixXd b = testing::random_siegel(rng, n, 0.95);
        CHECK(mobius_to_origin(a, b).allFinite());
        CHECK(siegel_log0(a).allFinite());
        CHECK(siegel_log(a, b).allFinite());
        CHECK(std::isfinite(siegel_distance(a, b)));
    }
}
