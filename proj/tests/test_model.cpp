#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "wcl/analysis.hpp"
#include "wcl/model.hpp"
#include "wcl/propagate.hpp"

using namespace wcl;

TEST_CASE("random model construction is deterministic in the seed") {
    const SystemModel a = build_random_model(7, 2, 8, 1.0, 1.0);
    const SystemModel b = build_random_model(7, 2, 8, 1.0, 1.0);
    CHECK(a.omega == b.omega);
    CHECK(a.A == b.A);
    CHECK(model_to_json(a) == model_to_json(b));
}

TEST_CASE("zero coupling scale gives A = 0 and free dynamics") {
    const SystemModel m = build_random_model(3, 2, 4, 1.0, 0.0);
    CHECK(m.A.cwiseAbs().maxCoeff() == 0.0);
    const Propagators props(m);
    for (double t : {0.5, 2.0})
        CHECK(opalg::op_norm(Operator(props.dressed_group(t) - props.free_group(t))) <
              1e-13);
}

TEST_CASE("random model passes all validator invariants") {
    const SystemModel m = build_random_model(1, 4, 64, 5.0, 1.0);
    const ValidationReport rep = validate_model(m);
    CHECK(rep.pass());
    for (const auto& c : rep.checks) CHECK(c.residual <= std::max(c.tolerance, 1e-10));
}

TEST_CASE("validator flags a Hermitian perturbation") {
    SystemModel m = build_random_model(2, 2, 4, 1.0, 1.0);
    Rng rng(55);
    const Operator g = oracles::random_complex(rng, m.dim(), m.dim());
    m.A = (g + g.adjoint()) / 2.0;  // Hermitian, not skew
    const ValidationReport rep = validate_model(m);
    CHECK_FALSE(rep.pass());
    CHECK(rep.checks[0].residual > 0.1);
}

TEST_CASE("norm check catches a non-orthogonal idempotent") {
    Operator p = Operator::Zero(3, 3);
    p(0, 0) = 1.0;
    p(0, 1) = 1.0;  // idempotent but oblique
    CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(opalg::op_norm(p) > 1.0 + 1e-6);
    CHECK_FALSE(opalg::is_projector(p));
}

TEST_CASE("quasi-continuum correlation integral plateaus before the recurrence") {
    const int n1 = 64;
    const double bandwidth = 20.0;
    const SystemModel m = build_quasi_continuum_model(21, 2, n1, bandwidth, 5.0, 1.0);
    QuadratureConfig qc;
    const double t_rec = 2.0 * M_PI * (n1 - 1) / bandwidth;
    const double a_mid = analysis::correlation_integral(m, 0, 0.45 * t_rec, qc);
    const double a_late = analysis::correlation_integral(m, 0, 0.9 * t_rec, qc);
    const double a_early = analysis::correlation_integral(m, 0, 0.08 * t_rec, qc);
    CHECK(a_early > 0.0);
    // growth happens early; the late window adds only a small fraction
    CHECK(a_mid > 0.8 * a_late);
    CHECK(a_late < 1.35 * a_mid);
    CHECK(a_early > 0.3 * a_mid);
}

TEST_CASE("flat profile shows the sinc-like recurrence of the discrete band") {
    const int n1 = 32;
    const double bandwidth = 16.0;
    const SystemModel m =
        build_quasi_continuum_model(23, 1, n1, bandwidth, 1e9, 1.0);
    const double d_omega = bandwidth / (n1 - 1);
    const double t_rec = 2.0 * M_PI / d_omega;
    const Operator a01 = m.A.topRightCorner(m.n0, m.n1);
    const Operator a10 = m.A.bottomLeftCorner(m.n1, m.n0);
    const RVector w_env = m.omega.tail(m.n1);
    auto corr = [&](double x) {
        CVector d(m.n1);
        for (int k = 0; k < m.n1; ++k) d(k) = std::exp(Complex(0, w_env(k) * x));
        return opalg::op_norm(Operator(a01 * d.asDiagonal() * a10));
    };
    const double c0 = corr(0.0);
    const double c_rec = corr(t_rec);
    double c_mid = 0.0;
    for (double x = 0.3 * t_rec; x < 0.7 * t_rec; x += 0.05 * t_rec)
        c_mid = std::max(c_mid, corr(x));
    CHECK(c_rec > 0.98 * c0);   // full revival at the recurrence time
    CHECK(c_mid < 0.5 * c0);    // decayed in between
}

TEST_CASE("JSON round-trip is bit-exact and stable under re-serialization") {
    const SystemModel m = build_random_model(42, 3, 5, 2.0, 0.7, 0.25);
    const std::string text = model_to_json(m);
    const SystemModel back = model_from_json_text(text);
    CHECK(back.n0 == m.n0);
    CHECK(back.n1 == m.n1);
    CHECK(back.seed == m.seed);
    CHECK(back.lambda == m.lambda);
    CHECK(back.omega == m.omega);
    CHECK(back.A == m.A);
    CHECK(model_to_json(back) == text);
}

TEST_CASE("quadrature config invariants are enforced") {
    QuadratureConfig qc;
    qc.x_max_factor = 4.0;
    CHECK_THROWS_AS(qc.validate(), ConstructionError);
    qc = QuadratureConfig{};
    qc.nodes_per_unit_T = 8;
    CHECK_THROWS_AS(qc.validate(), ConstructionError);
    CHECK_NOTHROW(QuadratureConfig{}.validate());
}
