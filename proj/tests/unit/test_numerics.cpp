#include <doctest.h>

#include <limits>

#include "dgn/error.hpp"
#include "dgn/numerics.hpp"
#include "dgn/problems.hpp"
#include "oracles.hpp"

using namespace dgn;
using oracle::random_matrix;
using oracle::random_vector;
using oracle::rel_err;

TEST_CASE("lsq_min_norm small cases") {
    RealVector b(2);
    b << 1, 2;
    CHECK(rel_err(lsq_min_norm<double>(RealMatrix::Identity(2, 2), b), b) < 1e-15);

    RealMatrix j(2, 1);
    j << 1, 1;
    b << 1, 3;
    const RealVector p = lsq_min_norm<double>(j, b);
    REQUIRE(p.size() == 1);
    CHECK(p(0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("lsq_min_norm matches the SVD pseudoinverse") {
    for (int trial = 0; trial < 20; ++trial) {
        const RealMatrix j = random_matrix(5, 3);
        const RealVector b = random_vector(5);
        CHECK(rel_err(lsq_min_norm<double>(j, b), RealVector(oracle::svd_pinv<double>(j) * b)) < 1e-10);
    }
    const ComplexMatrix jc = oracle::random_complex_matrix(7, 4);
    const ComplexVector bc = oracle::random_complex_vector(7);
    CHECK(rel_err(lsq_min_norm<Complex>(jc, bc), ComplexVector(oracle::svd_pinv<Complex>(jc) * bc)) < 1e-10);
}

TEST_CASE("lsq_min_norm gives the minimum-norm solution for rank-deficient and wide systems") {
    RealMatrix j = random_matrix(6, 4);
    j.col(3) = j.col(0) + 2.0 * j.col(1);
    const RealVector b = random_vector(6);
    CHECK(rel_err(lsq_min_norm<double>(j, b), RealVector(oracle::svd_pinv<double>(j) * b)) < 1e-9);

    const RealMatrix wide = random_matrix(2, 5);
    const RealVector bw = random_vector(2);
    CHECK(rel_err(lsq_min_norm<double>(wide, bw), RealVector(oracle::svd_pinv<double>(wide) * bw)) < 1e-10);
}

TEST_CASE("lsq_min_norm rejects non-finite input") {
    RealMatrix j = RealMatrix::Identity(2, 2);
    RealVector b(2);
    b << 1, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lsq_min_norm<double>(j, b), InvalidInputError);
    b << 1, 1;
    j(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(lsq_min_norm<double>(j, b), InvalidInputError);
}

TEST_CASE("property: least-squares optimality against random trial steps") {
    for (int trial = 0; trial < 20; ++trial) {
        const RealMatrix j = random_matrix(8, 3);
        const RealVector b = random_vector(8);
        const double best = (j * lsq_min_norm<double>(j, b) - b).norm();
        for (int k = 0; k < 100; ++k) {
            const RealVector p = random_vector(3, -3.0, 3.0);
            CHECK(best <= (j * p - b).norm() + 1e-14);
        }
    }
}

TEST_CASE("qr_factorize examples") {
    const auto id = qr_factorize<double>(RealMatrix::Identity(3, 3));
    CHECK((id.thin_q() - RealMatrix::Identity(3, 3)).norm() < 1e-15);
    CHECK((id.r() - RealMatrix::Identity(3, 3)).norm() < 1e-15);

    RealMatrix col(2, 1);
    col << 0, 2;
    const auto f = qr_factorize<double>(col);
    CHECK(f.r()(0, 0) == doctest::Approx(2.0));

    CHECK_THROWS_AS(qr_factorize<double>(random_matrix(2, 3)), ShapeError);
}

TEST_CASE("property: thin QR is orthonormal, triangular and reconstructs J") {
    for (int trial = 0; trial < 20; ++trial) {
        const RealMatrix j = random_matrix(6, 4);
        const auto f = qr_factorize<double>(j);
        const RealMatrix q = f.thin_q();
        const RealMatrix r = f.r();
        CHECK((q.transpose() * q - RealMatrix::Identity(4, 4)).norm() < 1e-12);
        CHECK(r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm() == 0.0);
        for (Index i = 0; i < 4; ++i) CHECK(r(i, i) >= 0.0);
        CHECK((q * r - j * f.permutation()).norm() <= 1e-10 * j.norm());
    }
    const ComplexMatrix jc = oracle::random_complex_matrix(6, 3);
    const auto fc = qr_factorize<Complex>(jc);
    const ComplexMatrix qc = fc.thin_q();
    CHECK((qc.adjoint() * qc - ComplexMatrix::Identity(3, 3)).norm() < 1e-12);
    CHECK((qc * fc.r() - jc * fc.permutation()).norm() <= 1e-10 * jc.norm());
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(fc.r()(i, i).imag()) < 1e-14);
}

TEST_CASE("apply_normal_inverse") {
    RealVector v(2);
    v << 3, 4;
    CHECK(rel_err(apply_normal_inverse(qr_factorize<double>(RealMatrix::Identity(2, 2)), v), v) < 1e-15);

    RealMatrix d = RealMatrix::Zero(3, 2);
    d(0, 0) = 2;
    d(1, 1) = 2;
    v << 4, 4;
    CHECK(rel_err(apply_normal_inverse(qr_factorize<double>(d), v), RealVector::Ones(2)) < 1e-15);

    for (int trial = 0; trial < 10; ++trial) {
        const RealMatrix j = random_matrix(5, 3);
        const RealVector w = random_vector(3);
        const RealVector want = (j.transpose() * j).inverse() * w;
        CHECK(rel_err(apply_normal_inverse(qr_factorize<double>(j), w), want) < 1e-10);
    }

    RealMatrix singular = random_matrix(4, 2);
    singular.col(1) = 3.0 * singular.col(0);
    CHECK_THROWS_AS(apply_normal_inverse(qr_factorize<double>(singular), RealVector(RealVector::Ones(2))), RankDeficientError);
}

TEST_CASE("apply_projector_complement") {
    const RealMatrix sq = random_matrix(3, 3) + 3.0 * RealMatrix::Identity(3, 3);
    const RealVector r3 = random_vector(3);
    CHECK(apply_projector_complement(qr_factorize<double>(sq), r3).norm() <= 1e-12 * r3.norm());

    RealMatrix e1(2, 1);
    e1 << 1, 0;
    RealVector r(2);
    r << 0, 5;
    CHECK(rel_err(apply_projector_complement(qr_factorize<double>(e1), r), r) < 1e-15);

    for (int trial = 0; trial < 20; ++trial) {
        const RealMatrix j = random_matrix(5, 3);
        const RealVector b = random_vector(5);
        const auto f = qr_factorize<double>(j);
        const RealVector pb = apply_projector_complement(f, b);
        CHECK((j.transpose() * pb).norm() < 1e-10);
        CHECK((apply_projector_complement(f, pb) - pb).norm() < 1e-12);
    }
    CHECK_THROWS_AS(apply_projector_complement(qr_factorize<double>(e1), RealVector(RealVector::Ones(3))), ShapeError);
}

TEST_CASE("apply_pinv_transpose") {
    const RealVector v = random_vector(3);
    CHECK(rel_err(apply_pinv_transpose(qr_factorize<double>(RealMatrix::Identity(3, 3)), v), v) < 1e-15);

    RealMatrix two(1, 1);
    two << 2;
    RealVector one(1);
    one << 3;
    CHECK(apply_pinv_transpose(qr_factorize<double>(two), one)(0) == doctest::Approx(1.5));

    for (int trial = 0; trial < 10; ++trial) {
        const RealMatrix j = random_matrix(5, 3);
        const RealVector w = random_vector(3);
        const RealVector want = oracle::svd_pinv<double>(j).transpose() * w;
        CHECK(rel_err(apply_pinv_transpose(qr_factorize<double>(j), w), want) < 1e-10);
    }
    const ComplexMatrix jc = oracle::random_complex_matrix(5, 3);
    const ComplexVector wc = oracle::random_complex_vector(3);
    const ComplexVector want = oracle::svd_pinv<Complex>(jc).adjoint() * wc;
    CHECK(rel_err(apply_pinv_transpose(qr_factorize<Complex>(jc), wc), want) < 1e-10);
}

TEST_CASE("pinv_rank_update_action examples") {
    const RealMatrix a = random_matrix(3, 3) + 3.0 * RealMatrix::Identity(3, 3);
    const RealVector u = random_vector(3);
    const RealVector v = random_vector(3);
    const RealVector ainv_u = a.inverse() * u;
    const double beta = 1.0 + v.dot(ainv_u);
    CHECK(rel_err(pinv_rank_update_action(a, u, v), RealVector(ainv_u / beta)) < 1e-10);

    const RealMatrix tall = random_matrix(6, 3);
    const RealVector ut = random_vector(6);
    CHECK(rel_err(pinv_rank_update_action(tall, ut, RealVector::Zero(3)),
                  RealVector(oracle::svd_pinv<double>(tall) * ut)) < 1e-10);

    const RealVector vt = random_vector(3);
    const RealMatrix updated = tall + ut * vt.transpose();
    CHECK(rel_err(pinv_rank_update_action(tall, ut, vt), RealVector(oracle::svd_pinv<double>(updated) * ut)) < 1e-8);
}

TEST_CASE("property: rank-one pseudoinverse update on random full-rank instances") {
    std::uniform_int_distribution<int> rows(2, 10);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index m = rows(oracle::rng());
        const Index l = std::uniform_int_distribution<Index>(1, m)(oracle::rng());
        const RealMatrix a = random_matrix(m, l);
        const RealVector u = random_vector(m);
        const RealVector v = random_vector(l);
        const RealVector want = oracle::svd_pinv<double>(RealMatrix(a + u * v.transpose())) * u;
        const RealVector got = pinv_rank_update_action(a, u, v);
        CHECK((got - want).norm() <= 1e-8 * std::max(want.norm(), 1e-300));
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("property: square-case reduction of the update formula") {
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = std::uniform_int_distribution<Index>(1, 8)(oracle::rng());
        const RealMatrix a = random_matrix(n, n) + 2.0 * static_cast<double>(n) * RealMatrix::Identity(n, n);
        const RealVector u = random_vector(n);
        const RealVector v = random_vector(n);
        const RealVector ainv_u = a.colPivHouseholderQr().solve(u);
        const RealVector want = ainv_u / (1.0 + v.dot(ainv_u));
        CHECK(rel_err(pinv_rank_update_action(a, u, v), want) < 1e-10);
    }
}

TEST_CASE("fd_jacobian") {
    const RealMatrix m = random_matrix(3, 2);
    auto linear = [&](const RealVector& x) { return RealVector(m * x); };
    const RealVector x = random_vector(2);
    CHECK((fd_jacobian<double>(linear, x, 1e-5) - m).cwiseAbs().maxCoeff() < 1e-9);

    const auto h = himmelblau();
    RealVector x11(2);
    x11 << 1, 1;
    const double step = 1e-5 * 2.0;
    CHECK((fd_jacobian(h, x11) - h.jacobian(x11)).cwiseAbs().maxCoeff() < 10.0 * step * step);

    CHECK_THROWS_AS(fd_jacobian<double>(linear, x, 0.0), InvalidInputError);
}
