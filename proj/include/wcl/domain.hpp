#pragma once

// Triangle integration domains of the coordinate transform with lambda^-2
// jacobian: vertices (l^2 q, 0), (tau + l^2 q, 0),
// ((1/2 - alpha) tau + l^2 q, l^-2 tau) in the (sigma, x) plane, optionally
// intersected with [0, tau] x [0, inf).

#include <array>
#include <cmath>

#include "wcl/errors.hpp"

namespace wcl {

struct TriangleDomain {
    double lambda = 0.0;
    double tau = 0.0;
    double alpha = 0.0;
    double q = 0.0;
    bool truncated = false;

    TriangleDomain(double lambda_, double tau_, double alpha_, double q_,
                   bool truncated_)
        : lambda(lambda_), tau(tau_), alpha(alpha_), q(q_), truncated(truncated_) {
        if (lambda == 0.0) throw CouplingZero("TriangleDomain: lambda = 0");
        if (tau < 0.0) throw ConstructionError("TriangleDomain: tau must be >= 0");
    }

    std::array<std::array<double, 2>, 3> vertices() const {
        const double l2 = lambda * lambda;
        return {{{l2 * q, 0.0},
                 {tau + l2 * q, 0.0},
                 {(0.5 - alpha) * tau + l2 * q, tau / l2}}};
    }

    double area() const {
        const auto v = vertices();
        return 0.5 * std::abs((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) -
                              (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
    }
};

// Closed-domain membership by half-plane tests on the three edges (and the
// two truncation half-planes when the domain is truncated).
inline bool domain_contains(const TriangleDomain& d, double sigma, double x) {
    const auto v = d.vertices();
    auto cross = [](double ax, double ay, double bx, double by) {
        return ax * by - ay * bx;
    };
    const double ref = cross(v[1][0] - v[0][0], v[1][1] - v[0][1], v[2][0] - v[0][0],
                             v[2][1] - v[0][1]);
    const double sgn = (ref >= 0.0) ? 1.0 : -1.0;
    for (int e = 0; e < 3; ++e) {
        const auto& p = v[e];
        const auto& r = v[(e + 1) % 3];
        const double c = cross(r[0] - p[0], r[1] - p[1], sigma - p[0], x - p[1]);
        if (sgn * c < 0.0) return false;
    }
    if (d.truncated) {
        if (x < 0.0) return false;
        if (sigma < 0.0 || sigma > d.tau) return false;
    }
    return true;
}

} // namespace wcl
