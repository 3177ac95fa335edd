#pragma once

// The exact integral equation for the projected evolution and its pieces:
// the slowly varying kernel K(lambda, tau), the Volterra / von Neumann
// solution of f = b + H f, and the second-order memory term in both the
// (s, u) parameterization and the transformed triangle-domain one.
//
// The kernel uses the dressed reduced group X^l (not the free one) in
// K(lambda, tau); that is the version for which f = b + H f is an identity
// of the exact projected dynamics.

#include <functional>
#include <vector>

#include "wcl/domain.hpp"
#include "wcl/errors.hpp"
#include "wcl/model.hpp"
#include "wcl/opalg.hpp"
#include "wcl/propagate.hpp"
#include "wcl/quadrature.hpp"

namespace wcl::kernels {

/// K(lambda, tau) = integral over x in [0, tau/lambda^2] of
/// X^l_{-x} A01 U^l_x A10, supported on range(P0).
inline Operator memory_kernel(const Propagators& props, double tau,
                              const QuadratureConfig& qc) {
    const SystemModel& m = props.model();
    if (m.lambda == 0.0) throw CouplingZero("memory_kernel: lambda = 0");
    if (tau < 0.0) throw ConstructionError("memory_kernel: tau must be >= 0");
    const int n = m.dim();
    if (tau == 0.0) return Operator::Zero(n, n);
    const double x_hi = tau / (m.lambda * m.lambda);
    const Operator a01 = m.A_block(0, 1);
    const Operator a10 = m.A_block(1, 0);
    if (a01.cwiseAbs().maxCoeff() == 0.0) return Operator::Zero(n, n);
    auto f = [&](double x) -> Operator {
        return props.reduced_free(-x) * a01 * props.dressed_group(x) * a10;
    };
    const auto p = quadrature::Panelization::uniform(0.0, x_hi, qc.nodes_per_unit_T,
                                                     qc.quad_scheme);
    return quadrature::integrate_1d(f, p);
}

struct VolterraSolution {
    std::vector<double> grid;       // tau values, uniform
    std::vector<CVector> values;    // f(tau_k), full dimension
    std::vector<double> increments; // sup-norm of successive von Neumann terms
    int iterations = 0;

    const CVector& at_node(std::size_t k) const { return values.at(k); }

    CVector operator()(double tau) const {
        if (grid.size() == 1 || tau <= grid.front()) return values.front();
        if (tau >= grid.back()) return values.back();
        const double h = grid[1] - grid[0];
        const std::size_t k = std::min(grid.size() - 2,
                                       static_cast<std::size_t>(tau / h));
        const double s = (tau - grid[k]) / h;
        return (1.0 - s) * values[k] + s * values[k + 1];
    }
};

namespace detail {

// cumulative Newton-Cotes weights for a prefix [0, k h] on a uniform grid:
// Simpson for even k, Simpson + 3/8 tail for odd k >= 3, trapezoid for k = 1
inline std::vector<double> prefix_weights(int k, double h) {
    std::vector<double> w(k + 1, 0.0);
    if (k == 0) return w;
    if (k == 1) {
        w[0] = w[1] = h / 2.0;
        return w;
    }
    int simpson_end = (k % 2 == 0) ? k : k - 3;
    if (k == 3) simpson_end = 0;
    for (int i = 0; i < simpson_end; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if (k % 2 == 1) {
        const int s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    return w;
}

} // namespace detail

/// Solves f = b + H_l f on [0, tau_bar] by von Neumann iteration, where
/// (H_l g)(tau) = int_0^tau X^l_{-s/l^2} K(l, tau - s) X^l_{s/l^2} g(s) ds.
/// Increment norms decay factorially; a stall signals a too-coarse grid.
inline VolterraSolution volterra_solve(const Propagators& props, double tau_bar,
                                       const CVector& b, const QuadratureConfig& qc) {
    const SystemModel& m = props.model();
    if (m.lambda == 0.0) throw CouplingZero("volterra_solve: lambda = 0");
    if (tau_bar <= 0.0) throw ConstructionError("volterra_solve: tau_bar must be > 0");
    const double l2 = m.lambda * m.lambda;
    const int n0 = m.n0;
    // grid step: one quadrature node per 1/nodes_per_unit_T of unrescaled time
    const double h = l2 / qc.nodes_per_unit_T;
    const int nt = std::max(2, static_cast<int>(std::ceil(tau_bar / h)));
    const double step = tau_bar / nt;

    VolterraSolution sol;
    sol.grid.resize(nt + 1);
    for (int k = 0; k <= nt; ++k) sol.grid[k] = k * step;

    // slowly varying kernel at grid points, compressed to range(P0); the
    // x-integral is accumulated per interval with a midpoint Simpson rule
    const Operator a01 = m.A_block(0, 1);
    const Operator a10 = m.A_block(1, 0);
    const double hx = step / l2;
    std::vector<Operator> kern(nt + 1);
    kern[0] = Operator::Zero(n0, n0);
    auto f_of_x = [&](double x) -> Operator {
        return compress0(props.reduced_free(-x) * a01 * props.dressed_group(x) * a10,
                         n0);
    };
    Operator f_left = f_of_x(0.0);
    for (int k = 0; k < nt; ++k) {
        const Operator f_mid = f_of_x((k + 0.5) * hx);
        const Operator f_right = f_of_x((k + 1.0) * hx);
        kern[k + 1] = kern[k] + (hx / 6.0) * (f_left + 4.0 * f_mid + f_right);
        f_left = f_right;
    }

    // X^l rotations at the grid's rescaled times
    std::vector<Operator> rot(nt + 1);
    for (int k = 0; k <= nt; ++k)
        rot[k] = compress0(props.reduced_free(sol.grid[k] / l2), n0);

    std::vector<std::vector<double>> weights(nt + 1);
    for (int k = 0; k <= nt; ++k) weights[k] = detail::prefix_weights(k, step);

    const CVector b0 = b.head(n0);
    std::vector<CVector> f(nt + 1, b0);
    std::vector<CVector> term(nt + 1, b0);  // current von Neumann term H^m b
    const double scale = std::max(1.0, b0.norm());
    const int max_iter = 200;
    bool converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<CVector> next(nt + 1, CVector::Zero(n0));
        for (int k = 1; k <= nt; ++k) {
            CVector acc = CVector::Zero(n0);
            const auto& w = weights[k];
            for (int j = 0; j <= k; ++j) {
                const CVector rotated = rot[j] * term[j];
                acc += w[j] * (rot[j].adjoint() * (kern[k - j] * rotated));
            }
            next[k] = acc;
        }
        double inc = 0.0;
        for (int k = 0; k <= nt; ++k) {
            f[k] += next[k];
            inc = std::max(inc, next[k].norm());
        }
        sol.increments.push_back(inc);
        sol.iterations = it;
        term = std::move(next);
        if (inc <= qc.volterra_tol * scale) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw VolterraDivergence(
            "volterra_solve: no convergence within the iteration cap; "
            "the quadrature grid is too coarse or tau_bar is too large");
    sol.values.resize(nt + 1);
    for (int k = 0; k <= nt; ++k) {
        sol.values[k] = CVector::Zero(m.dim());
        sol.values[k].head(n0) = f[k];
    }
    return sol;
}

/// int_0^t ds int_0^s du  X^l_{t-s} A01 U^l_{s-u} A10 W(u), the memory term
/// of the exact equation in the (s, u) parameterization (without lambda^2).
inline Operator second_order_term_su(const Propagators& props, double t,
                                     const QuadratureConfig& qc,
                                     const std::function<Operator(double)>& w) {
    const SystemModel& m = props.model();
    if (t < 0.0) throw ConstructionError("second_order_term_su: t must be >= 0");
    const int n = m.dim();
    if (t == 0.0) return Operator::Zero(n, n);
    const Operator a01 = m.A_block(0, 1);
    const Operator a10 = m.A_block(1, 0);
    auto f = [&](double s, double u) -> Operator {
        return props.reduced_free(t - s) * a01 * props.dressed_group(s - u) * a10 *
               w(u);
    };
    return quadrature::integrate_ordered_2d(f, 0.0, t, qc.nodes_per_unit_T,
                                            qc.quad_scheme);
}

/// The same memory term after the change of variables with lambda^-2
/// jacobian, integrated over the (untruncated) triangle domain
/// D(lambda, tau, alpha, q); equals second_order_term_su at t = tau/lambda^2
/// up to quadrature error. The evolution argument of W never leaves [0, t]
/// on this domain; stray negative arguments from edge rounding are clipped.
inline Operator second_order_term_triangle(const Propagators& props, double tau,
                                           double alpha, double q,
                                           const QuadratureConfig& qc,
                                           const std::function<Operator(double)>& w) {
    const SystemModel& m = props.model();
    if (m.lambda == 0.0) throw CouplingZero("second_order_term_triangle: lambda = 0");
    if (tau < 0.0)
        throw ConstructionError("second_order_term_triangle: tau must be >= 0");
    const int n = m.dim();
    if (tau == 0.0) return Operator::Zero(n, n);
    const double l2 = m.lambda * m.lambda;
    const double t_full = tau / l2;
    const Operator a01 = m.A_block(0, 1);
    const Operator a10 = m.A_block(1, 0);
    // quadrature runs in (sigma/lambda^2, x); the extra lambda^2 from
    // d(sigma) cancels the lambda^-2 jacobian of the transform
    const std::array<double, 2> v1 = {q, 0.0};
    const std::array<double, 2> v2 = {t_full + q, 0.0};
    const std::array<double, 2> v3 = {(0.5 - alpha) * t_full + q, t_full};
    auto f = [&](double sp, double x) -> Operator {
        const double x_time = t_full - sp + q - (alpha + 0.5) * x;
        const double u = std::max(0.0, sp - q + (alpha - 0.5) * x);
        return props.reduced_free(x_time) * a01 * props.dressed_group(x) * a10 * w(u);
    };
    double lo_s = std::min({v1[0], v2[0], v3[0]});
    double hi_s = std::max({v1[0], v2[0], v3[0]});
    const int na = static_cast<int>(std::ceil(qc.nodes_per_unit_T * (hi_s - lo_s)));
    const int nb = static_cast<int>(std::ceil(qc.nodes_per_unit_T * t_full));
    return quadrature::integrate_triangle_vertices(f, v1, v2, v3, na, nb,
                                                   qc.quad_scheme);
}

} // namespace wcl::kernels
