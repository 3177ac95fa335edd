#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "wcl/domain.hpp"
#include "wcl/quadrature.hpp"

using namespace wcl;
namespace quad = wcl::quadrature;

TEST_CASE("zero integrand integrates to the zero operator") {
    auto f = [](double) -> Operator { return Operator::Zero(3, 3); };
    const auto p =
        quad::Panelization::uniform(0.0, 2.0, 32.0, QuadScheme::GaussLegendrePanels);
    CHECK(quad::integrate_1d(f, p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Gaussian integral reproduces sqrt(pi) times the identity") {
    auto f = [](double x) -> Operator {
        return std::exp(-x * x) * Operator::Identity(2, 2);
    };
    for (QuadScheme scheme :
         {QuadScheme::GaussLegendrePanels, QuadScheme::CompositeSimpson}) {
        const auto p = quad::Panelization::uniform(-8.0, 8.0, 64.0, scheme);
        const Operator v = quad::integrate_1d(f, p);
        CHECK(std::abs(v(0, 0).real() - std::sqrt(M_PI)) < 1e-10);
        CHECK(std::abs(v(0, 1)) < 1e-15);
    }
}

TEST_CASE("Simpson panels show at least fourth-order self-convergence") {
    auto f = [](double x) -> Operator {
        Operator m(1, 1);
        m(0, 0) = Complex(std::sin(3.0 * x) * std::exp(-0.1 * x * x), std::cos(2.0 * x));
        return m;
    };
    auto value = [&](double density) {
        const auto p =
            quad::Panelization::uniform(0.0, 4.0, density, QuadScheme::CompositeSimpson);
        return quad::integrate_1d(f, p)(0, 0);
    };
    const Complex coarse = value(16.0), mid = value(32.0), fine = value(64.0);
    const double d1 = std::abs(coarse - mid);
    const double d2 = std::abs(mid - fine);
    CHECK(d1 / d2 >= 8.0);
}

TEST_CASE("parallel pairwise accumulation matches the sequential sum") {
    auto f = [](double x) -> Operator {
        Operator m(2, 2);
        m << Complex(std::sin(x), 0.1 * x), Complex(0, std::cos(2 * x)),
            Complex(std::exp(-x * x), 0), Complex(x, -x);
        return m;
    };
    const auto p =
        quad::Panelization::uniform(-3.0, 3.0, 48.0, QuadScheme::GaussLegendrePanels);
    const Operator seq = quad::integrate_1d(f, p, quad::Accumulate::Sequential);
    const Operator par = quad::integrate_1d(f, p, quad::Accumulate::PairwiseParallel);
    CHECK(opalg::op_norm(Operator(seq - par)) < 1e-13);
}

TEST_CASE("integrand blowup is reported with the offending node") {
    auto f = [](double x) -> Operator {
        Operator m = Operator::Identity(1, 1);
        if (x > 0.5) m(0, 0) = std::numeric_limits<double>::quiet_NaN();
        return m;
    };
    const auto p =
        quad::Panelization::uniform(0.0, 1.0, 32.0, QuadScheme::GaussLegendrePanels);
    CHECK_THROWS_AS(quad::integrate_1d(f, p), IntegrandBlowup);
}

TEST_CASE("ordered + swapped-ordered equals the box integral to rounding") {
    auto f = [](double t1, double t2) -> Operator {
        Operator m(2, 2);
        m << Complex(std::sin(t1 + 2 * t2), t1 * t2), Complex(std::cos(t1), 0),
            Complex(0, std::exp(0.1 * (t1 - t2))), Complex(t1 - 0.3 * t2, 1);
        return m;
    };
    auto swapped = [&](double t1, double t2) { return f(t2, t1); };
    for (QuadScheme scheme :
         {QuadScheme::GaussLegendrePanels, QuadScheme::CompositeSimpson}) {
        const double lo = -1.0, hi = 2.0, density = 24.0;
        const Operator ordered = quad::integrate_ordered_2d(f, lo, hi, density, scheme);
        const Operator ordered_swap =
            quad::integrate_ordered_2d(swapped, lo, hi, density, scheme);
        const auto p = quad::Panelization::uniform(lo, hi, density, scheme);
        auto inner = [&](double t1) -> Operator {
            auto g = [&](double t2) { return f(t1, t2); };
            return quad::integrate_1d(g, p);
        };
        const Operator box = quad::integrate_1d(inner, p);
        CHECK(opalg::op_norm(Operator(ordered + ordered_swap - box)) < 1e-12);
    }
}

TEST_CASE("ordered integral of a separable symmetric product has a closed form") {
    auto g = [](double t) -> Operator {
        Operator m(1, 1);
        m(0, 0) = std::exp(-t * t) * std::cos(t);
        return m;
    };
    const double lo = -4.0, hi = 4.0, density = 48.0;
    const Operator ordered = quad::integrate_ordered_separable(
        g, g, lo, hi, density, QuadScheme::GaussLegendrePanels);
    const auto p =
        quad::Panelization::uniform(lo, hi, density, QuadScheme::GaussLegendrePanels);
    const Complex total = quad::integrate_1d(g, p)(0, 0);
    CHECK(std::abs(ordered(0, 0) - 0.5 * total * total) < 1e-9);
}

TEST_CASE("ordered 2-D rule integrates a known exponential exactly enough") {
    auto f = [](double t1, double t2) -> Operator {
        Operator m(1, 1);
        m(0, 0) = std::exp(t2 - t1);
        return m;
    };
    const Operator v =
        quad::integrate_ordered_2d(f, 0.0, 1.0, 32.0, QuadScheme::GaussLegendrePanels);
    CHECK(std::abs(v(0, 0).real() - std::exp(-1.0)) < 1e-12);
}

TEST_CASE("separable ordered and generic ordered agree on an operator product") {
    Rng rng(44);
    const Operator ga = oracles::random_complex(rng, 2, 3);
    const Operator gb = oracles::random_complex(rng, 3, 2);
    auto g = [&](double t) -> Operator { return std::cos(t) * ga; };
    auto h = [&](double t) -> Operator { return std::exp(-t * t) * gb; };
    auto f = [&](double t1, double t2) -> Operator { return g(t1) * h(t2); };
    const Operator a = quad::integrate_ordered_separable(
        g, h, -2.0, 2.0, 32.0, QuadScheme::GaussLegendrePanels);
    const Operator b =
        quad::integrate_ordered_2d(f, -2.0, 2.0, 32.0, QuadScheme::GaussLegendrePanels);
    CHECK(opalg::op_norm(Operator(a - b)) < 1e-12);
}

TEST_CASE("ordered commutator rule matches the generic rule") {
    Rng rng(45);
    const Operator base1 = oracles::random_skew_hermitian(rng, 3);
    const Operator base2 = oracles::random_skew_hermitian(rng, 3);
    auto g = [&](double t) -> Operator {
        return std::cos(t) * base1 + std::sin(0.7 * t) * base2;
    };
    auto f = [&](double t1, double t2) -> Operator {
        return g(t1) * g(t2) - g(t2) * g(t1);
    };
    const Operator a = quad::integrate_ordered_commutator(
        g, -1.5, 1.5, 32.0, QuadScheme::GaussLegendrePanels);
    const Operator b =
        quad::integrate_ordered_2d(f, -1.5, 1.5, 32.0, QuadScheme::GaussLegendrePanels);
    CHECK(opalg::op_norm(Operator(a - b)) < 1e-12);
}

TEST_CASE("triangle integral of a constant gives the area") {
    const TriangleDomain d(0.5, 0.8, -1.0, 0.3, false);
    auto f = [](double, double) -> Operator {
        return 2.5 * Operator::Identity(1, 1);
    };
    const Operator v = quad::integrate_triangle(f, d, 24);
    CHECK(std::abs(v(0, 0).real() - 2.5 * d.area()) < 1e-9 * d.area());
    // area = tau * (tau / lambda^2) / 2
    CHECK(d.area() == doctest::Approx(0.8 * (0.8 / 0.25) / 2));
}

TEST_CASE("degenerate triangle integrates to zero") {
    const TriangleDomain d(0.5, 0.0, 0.3, 0.1, false);
    auto f = [](double, double) -> Operator { return Operator::Identity(2, 2); };
    CHECK(quad::integrate_triangle(f, d, 16).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("triangle quadrature agrees with a Monte Carlo oracle") {
    const TriangleDomain d(0.7, 0.6, 0.25, -0.2, false);
    auto f_scalar = [](double s, double x) {
        return std::sin(1.3 * s + 0.4 * x) + 0.2 * s * x;
    };
    auto f = [&](double s, double x) -> Operator {
        Operator m(1, 1);
        m(0, 0) = f_scalar(s, x);
        return m;
    };
    const double quad_val = quad::integrate_triangle(f, d, 48)(0, 0).real();
    // MC over the bounding box with membership tests
    const auto v = d.vertices();
    double lo_s = v[0][0], hi_s = v[0][0], lo_x = v[0][1], hi_x = v[0][1];
    for (const auto& p : v) {
        lo_s = std::min(lo_s, p[0]);
        hi_s = std::max(hi_s, p[0]);
        lo_x = std::min(lo_x, p[1]);
        hi_x = std::max(hi_x, p[1]);
    }
    Rng rng(4242);
    const int samples = 400000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double s = rng.uniform(lo_s, hi_s);
        const double x = rng.uniform(lo_x, hi_x);
        const double val = domain_contains(d, s, x) ? f_scalar(s, x) : 0.0;
        sum += val;
        sum_sq += val * val;
    }
    const double box = (hi_s - lo_s) * (hi_x - lo_x);
    const double mean = sum / samples;
    const double var = sum_sq / samples - mean * mean;
    const double mc = box * mean;
    const double sigma = box * std::sqrt(var / samples);
    CHECK(std::abs(quad_val - mc) < 3.0 * sigma);
}

TEST_CASE("domain membership: vertices, truncation, and Monte Carlo area") {
    const TriangleDomain d(0.5, 0.4, -1.0, 0.3, false);
    const auto v = d.vertices();
    for (const auto& p : v) CHECK(domain_contains(d, p[0], p[1]));

    const TriangleDomain dt(0.5, 0.4, -1.0, 0.3, true);
    CHECK_FALSE(domain_contains(dt, 0.05, -0.01));  // x < 0 excluded when truncated
    CHECK_FALSE(domain_contains(dt, -0.01, 0.1));   // sigma < 0 excluded
    CHECK_FALSE(domain_contains(dt, 0.41, 0.1));    // sigma > tau excluded

    Rng rng(777);
    const int samples = 200000;
    int inside = 0;
    const double lo_s = -0.5, hi_s = 1.0, lo_x = 0.0, hi_x = 1.7;
    for (int i = 0; i < samples; ++i)
        if (domain_contains(d, rng.uniform(lo_s, hi_s), rng.uniform(lo_x, hi_x)))
            ++inside;
    const double mc_area =
        (hi_s - lo_s) * (hi_x - lo_x) * static_cast<double>(inside) / samples;
    const double exact = 0.4 * (0.4 / 0.25) / 2.0;  // tau * lambda^-2 tau / 2
    CHECK(std::abs(mc_area - exact) < 0.02 * exact);
}

TEST_CASE("panelization invariants are enforced") {
    quad::Panelization p;
    p.scheme = QuadScheme::CompositeSimpson;
    p.nodes_per_panel = 8;  // even: invalid for Simpson
    p.intervals = {{0.0, 1.0}};
    CHECK_THROWS_AS(p.validate(), ConstructionError);
    p.nodes_per_panel = 9;
    p.intervals = {{0.0, 1.0}, {0.5, 1.5}};  // overlapping
    CHECK_THROWS_AS(p.validate(), ConstructionError);
}
