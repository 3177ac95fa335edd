#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "wcl/opalg.hpp"
#include "wcl/rng.hpp"

using namespace wcl;

TEST_CASE("expm of the zero generator is the identity") {
    const Operator z = Operator::Zero(6, 6);
    const Operator e = opalg::expm(z, 3.7);
    CHECK((e - Operator::Identity(6, 6)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("expm of a diagonal skew generator is the diagonal of phases") {
    const int n = 5;
    Rng rng(3);
    Operator m = Operator::Zero(n, n);
    std::vector<double> w(n);
    for (int k = 0; k < n; ++k) {
        w[k] = rng.uniform(-3, 3);
        m(k, k) = Complex(0, w[k]);
    }
    const double t = 1.3;
    const Operator e = opalg::expm(m, t);
    for (int k = 0; k < n; ++k)
        CHECK(std::abs(e(k, k) - std::exp(Complex(0, w[k] * t))) < 1e-14);
    CHECK((e - Operator(e.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("expm matches the eigendecomposition oracle on a random skew matrix") {
    Rng rng(17);
    const Operator m = oracles::random_skew_hermitian(rng, 8);
    const Operator pade = opalg::expm(m, 0.7);
    const Operator eig = oracles::skew_expm_eig(m, 0.7);
    CHECK(opalg::op_norm(Operator(pade - eig)) < 1e-10);
}

TEST_CASE("expm rejects non-finite input") {
    Operator m = Operator::Zero(2, 2);
    m(0, 1) = Complex(std::numeric_limits<double>::infinity(), 0);
    CHECK_THROWS_AS(opalg::expm(m, 1.0), InvalidOperator);
}

TEST_CASE("op_norm basics") {
    CHECK(opalg::op_norm(Operator::Identity(4, 4)) == doctest::Approx(1.0));
    Operator d = Operator::Zero(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = 1.0;
    CHECK(opalg::op_norm(d) == doctest::Approx(2.0));
    d(2, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(opalg::op_norm(d), InvalidOperator);
}

TEST_CASE("op_norm agrees with power iteration on a random matrix") {
    Rng rng(5);
    const Operator m = oracles::random_complex(rng, 16, 16);
    const double svd = opalg::op_norm(m);
    const double pow = oracles::power_iteration_norm(m);
    CHECK(std::abs(svd - pow) / svd < 1e-9);
}

TEST_CASE("block with the identity projector returns the operator") {
    Rng rng(7);
    const Operator m = oracles::random_complex(rng, 5, 5);
    const Operator id = Operator::Identity(5, 5);
    CHECK((opalg::block(m, 0, 0, id) - m).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("blocks resolve the identity") {
    Rng rng(11);
    const int n = 6, n0 = 2;
    const Operator m = oracles::random_complex(rng, n, n);
    Operator p0 = Operator::Zero(n, n);
    for (int k = 0; k < n0; ++k) p0(k, k) = 1.0;
    const Operator sum = opalg::block(m, 0, 0, p0) + opalg::block(m, 0, 1, p0) +
                         opalg::block(m, 1, 0, p0) + opalg::block(m, 1, 1, p0);
    CHECK((sum - m).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("coordinate projector block equals direct index masking") {
    Rng rng(13);
    const int n = 7, n0 = 3;
    const Operator m = oracles::random_complex(rng, n, n);
    Operator p0 = Operator::Zero(n, n);
    for (int k = 0; k < n0; ++k) p0(k, k) = 1.0;
    const Operator b01 = opalg::block(m, 0, 1, p0);
    Operator masked = Operator::Zero(n, n);
    for (int r = 0; r < n0; ++r)
        for (int c = n0; c < n; ++c) masked(r, c) = m(r, c);
    CHECK((b01 - masked).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("block rejects non-projectors") {
    Rng rng(19);
    const Operator m = oracles::random_complex(rng, 4, 4);
    Operator notp = Operator::Identity(4, 4);
    notp(0, 1) = 0.5;  // neither idempotent nor Hermitian
    CHECK_THROWS_AS(opalg::block(m, 0, 0, notp), NotAProjector);
}

TEST_CASE("block is idempotent in its projector arguments") {
    Rng rng(23);
    const int n = 6, n0 = 2;
    const Operator m = oracles::random_complex(rng, n, n);
    Operator p0 = Operator::Zero(n, n);
    for (int k = 0; k < n0; ++k) p0(k, k) = 1.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const Operator once = opalg::block(m, i, j, p0);
            const Operator twice = opalg::block(once, i, j, p0);
            CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-14);
        }
}

TEST_CASE("skew generators exponentiate to isometries over sampled times") {
    Rng rng(29);
    const Operator m = oracles::random_skew_hermitian(rng, 9);
    for (double t : {-10.0, -4.5, -1.0, 0.3, 2.0, 7.7, 10.0})
        CHECK(std::abs(opalg::op_norm(opalg::expm(m, t)) - 1.0) < 1e-10);
}

TEST_CASE("expm satisfies the group law on sampled pairs") {
    Rng rng(31);
    const Operator m = oracles::random_skew_hermitian(rng, 7);
    for (auto [s, t] : std::vector<std::pair<double, double>>{
             {0.5, 0.25}, {-1.0, 2.0}, {3.0, -0.7}, {-2.5, -2.5}}) {
        const Operator lhs = opalg::expm(m, s) * opalg::expm(m, t);
        const Operator rhs = opalg::expm(m, s + t);
        CHECK(opalg::op_norm(Operator(lhs - rhs)) < 1e-10);
    }
}

TEST_CASE("skew_eig reconstructs the generator and its exponential") {
    Rng rng(37);
    const Operator m = oracles::random_skew_hermitian(rng, 10);
    const auto eig = opalg::skew_eig(m);
    Operator rebuilt = Operator::Zero(10, 10);
    for (int k = 0; k < 10; ++k)
        rebuilt += Complex(0, eig.omega(k)) *
                   (eig.vectors.col(k) * eig.vectors.col(k).adjoint());
    CHECK(opalg::op_norm(Operator(rebuilt - m)) < 1e-12);
    CHECK(opalg::op_norm(Operator(opalg::skew_exp(eig, 1.9) - opalg::expm(m, 1.9))) <
          1e-11);
}
