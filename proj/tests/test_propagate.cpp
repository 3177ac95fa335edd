#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "wcl/model.hpp"
#include "wcl/propagate.hpp"
#include "wcl/quadrature.hpp"

using namespace wcl;

namespace {

SystemModel decoupled_model(std::uint64_t seed) {
    SystemModel m = build_random_model(seed, 2, 6, 1.0, 1.0, 0.4);
    m.A.topRightCorner(m.n0, m.n1).setZero();
    m.A.bottomLeftCorner(m.n1, m.n0).setZero();
    return m;
}

} // namespace

TEST_CASE("free group: identity at t = 0 and exact group law") {
    const SystemModel m = build_random_model(2, 2, 6, 2.0, 1.0);
    const Propagators props(m);
    CHECK((props.free_group(0.0) - Operator::Identity(m.dim(), m.dim()))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
    const Operator lhs = props.free_group(0.7) * props.free_group(-2.2);
    const Operator rhs = props.free_group(-1.5);
    CHECK(opalg::op_norm(Operator(lhs - rhs)) < 1e-14);
}

TEST_CASE("free conjugation preserves the operator norm") {
    const SystemModel m = build_random_model(3, 2, 6, 2.0, 1.0);
    const Propagators props(m);
    const Operator a01 = m.A_block(0, 1);
    const double base = opalg::op_norm(a01);
    for (double t : {0.4, -3.0, 11.0})
        CHECK(std::abs(opalg::op_norm(props.free_conj(a01, t)) - base) < 1e-12);
}

TEST_CASE("free conjugation equals explicit group sandwiches") {
    const SystemModel m = build_random_model(43, 2, 5, 2.0, 1.0);
    const Propagators props(m);
    Rng rng(99);
    const Operator x = oracles::random_complex(rng, m.dim(), m.dim());
    for (double t : {0.8, -2.5}) {
        const Operator direct = props.free_conj(x, t);
        const Operator sandwich = props.free_group(-t) * x * props.free_group(t);
        CHECK((direct - sandwich).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("dressed group reduces to the free one at lambda = 0") {
    SystemModel m = build_random_model(5, 2, 6, 1.0, 1.0);
    m.lambda = 0.0;
    const Propagators props(m);
    for (double t : {0.3, -1.7})
        CHECK(opalg::op_norm(Operator(props.dressed_group(t) - props.free_group(t))) <
              1e-12);
}

TEST_CASE("dressed group commutes with P0 and is an isometry") {
    const SystemModel m = build_random_model(5, 3, 7, 1.0, 1.0, 0.6);
    const Propagators props(m);
    const Operator p0 = m.P0();
    for (double t : {0.9, -4.0}) {
        const Operator u = props.dressed_group(t);
        CHECK(opalg::op_norm(Operator(u * p0 - p0 * u)) < 1e-10);
        CHECK(std::abs(opalg::op_norm(u) - 1.0) < 1e-10);
    }
}

TEST_CASE("full group: free at lambda = 0, isometry, Duhamel residual") {
    SystemModel m = build_random_model(8, 2, 6, 1.0, 1.0, 0.5);
    {
        SystemModel free = m;
        free.lambda = 0.0;
        const Propagators props(free);
        CHECK(opalg::op_norm(Operator(props.full_group(1.1) - props.free_group(1.1))) <
              1e-12);
    }
    const Propagators props(m);
    CHECK(std::abs(opalg::op_norm(props.full_group(2.3)) - 1.0) < 1e-10);

    // V_t = U^l_t + l int_0^t U^l_{t-s} (A01 + A10) V_s ds
    const double t = 2.0;
    const Operator hop = m.A_block(0, 1) + m.A_block(1, 0);
    auto f = [&](double s) -> Operator {
        return props.dressed_group(t - s) * hop * props.full_group(s);
    };
    const auto p = quadrature::Panelization::uniform(0.0, t, 128.0,
                                                     QuadScheme::GaussLegendrePanels);
    const Operator duhamel =
        props.dressed_group(t) + m.lambda * quadrature::integrate_1d(f, p);
    CHECK(opalg::op_norm(Operator(props.full_group(t) - duhamel)) < 1e-8);
}

TEST_CASE("reduced free evolution is an isometry group on range(P0)") {
    const SystemModel m = build_random_model(13, 3, 5, 1.0, 1.0, 0.7);
    const Propagators props(m);
    CHECK(opalg::op_norm(Operator(props.reduced_free(0.0) - m.P0())) < 1e-14);
    CHECK(std::abs(opalg::op_norm(props.reduced_free(3.1)) - 1.0) < 1e-10);
    const Operator lhs = compress0(props.reduced_free(1.2), m.n0) *
                         compress0(props.reduced_free(-0.5), m.n0);
    const Operator rhs = compress0(props.reduced_free(0.7), m.n0);
    CHECK(opalg::op_norm(Operator(lhs - rhs)) < 1e-10);
}

TEST_CASE("decoupled blocks make the projected evolution free") {
    const SystemModel m = decoupled_model(17);
    const Propagators props(m);
    for (double t : {0.5, 3.0, -2.0})
        CHECK(opalg::op_norm(
                  Operator(props.exact_projected(t) - props.reduced_free(t))) < 1e-11);
}

TEST_CASE("projected evolution at t = 0 is the identity on range(P0)") {
    const SystemModel m = build_random_model(19, 2, 7, 1.0, 1.0, 0.3);
    const Propagators props(m);
    CHECK(opalg::op_norm(Operator(compress0(props.exact_projected(0.0), m.n0) -
                                  Operator::Identity(m.n0, m.n0))) < 1e-14);
}

TEST_CASE("projected evolution equals the 00 block of the full group exactly") {
    const SystemModel m = build_random_model(23, 3, 6, 1.0, 1.0, 0.45);
    const Propagators props(m);
    for (double t : {0.8, 5.5}) {
        const Operator via_block = opalg::block(props.full_group(t), 0, 0, m.P0());
        CHECK((props.exact_projected(t) - via_block).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("interaction picture: identity at tau = 0 and under decoupling") {
    const SystemModel coupled = build_random_model(29, 2, 6, 1.0, 1.0, 0.35);
    const Propagators props(coupled);
    CVector b = CVector::Zero(coupled.dim());
    b(0) = Complex(0.6, 0.2);
    b(1) = Complex(0.0, -0.7);
    CHECK((props.interaction_picture(0.0, b) - b).norm() < 1e-14);

    const SystemModel free = decoupled_model(31);
    const Propagators props_free(free);
    CVector c = CVector::Zero(free.dim());
    c(0) = 1.0;
    c(1) = Complex(0.2, 0.4);
    for (double tau : {0.1, 0.5, 1.5})
        CHECK((props_free.interaction_picture(tau, c) - c).norm() < 1e-11);
}

TEST_CASE("interaction picture norm stays bounded by the initial norm") {
    const SystemModel m = build_random_model(37, 2, 8, 1.0, 1.0, 0.3);
    const Propagators props(m);
    CVector b = CVector::Zero(m.dim());
    b(0) = Complex(0.8, 0.1);
    b(1) = Complex(-0.3, 0.5);
    const double nb = b.norm();
    for (double tau : {0.05, 0.2, 0.4, 0.8})
        CHECK(props.interaction_picture(tau, b).norm() <= nb + 1e-8);
}

TEST_CASE("interaction picture rejects lambda = 0") {
    SystemModel m = build_random_model(41, 2, 4, 1.0, 1.0);
    m.lambda = 0.0;
    const Propagators props(m);
    CVector b = CVector::Zero(m.dim());
    b(0) = 1.0;
    CHECK_THROWS_AS(props.interaction_picture(0.3, b), CouplingZero);
}
