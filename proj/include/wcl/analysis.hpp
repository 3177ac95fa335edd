#pragma once

// Experiment harness: weak-coupling convergence sweeps against the exact
// projected evolution, contraction scans of semigroup norms, resolvent
// (dissipativity) checks, correlation-integral diagnostics, and the
// commutator-isometry check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wcl/errors.hpp"
#include "wcl/generators.hpp"
#include "wcl/io.hpp"
#include "wcl/model.hpp"
#include "wcl/opalg.hpp"
#include "wcl/propagate.hpp"
#include "wcl/quadrature.hpp"
#include "wcl/threads.hpp"

namespace wcl::analysis {

struct ResultRow {
    double lambda = 0.0;
    double T_lambda = 0.0;
    double sup_error = 0.0;
    double argmax_t = 0.0;
    double max_norm = 0.0;
    double a0_plateau = 0.0;
    double wall_ms = 0.0;
    std::map<std::string, double> diagnostics;
};

struct ExperimentResult {
    std::string experiment;
    std::string model_summary;  // JSON fragment
    std::vector<double> lambda_grid;
    double tau_bar = 0.0;
    int time_nodes = 0;
    QuadratureConfig qc;
    std::vector<ResultRow> rows;
    double wall_ms = 0.0;
    std::string config_echo;  // JSON fragment, echoed verbatim into outputs

    // fixed column order; documented in the CLI help text
    std::string to_csv() const {
        std::ostringstream os;
        os << "lambda,T_lambda,sup_error,argmax_t,max_norm,a0_plateau,wall_ms\n";
        for (const auto& r : rows)
            os << io::fmt17(r.lambda) << "," << io::fmt17(r.T_lambda) << ","
               << io::fmt17(r.sup_error) << "," << io::fmt17(r.argmax_t) << ","
               << io::fmt17(r.max_norm) << "," << io::fmt17(r.a0_plateau) << ","
               << io::fmt17(r.wall_ms) << "\n";
        return os.str();
    }

    std::string to_json() const {
        std::ostringstream os;
        os << "{\"schema\":\"" << io::kSchemaVersion << "\",";
        os << "\"experiment\":\"" << io::json_escape(experiment) << "\",";
        os << "\"model\":" << (model_summary.empty() ? "null" : model_summary) << ",";
        os << "\"lambda_grid\":"
           << io::real_array_json(lambda_grid.data(), lambda_grid.size()) << ",";
        os << "\"tau_bar\":" << io::fmt17(tau_bar) << ",";
        os << "\"time_nodes\":" << time_nodes << ",";
        os << "\"qc\":" << qc.to_json() << ",";
        os << "\"config\":" << (config_echo.empty() ? "null" : config_echo) << ",";
        os << "\"wall_ms\":" << io::fmt17(wall_ms) << ",";
        os << "\"rows\":[";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (i) os << ",";
            os << "{\"lambda\":" << io::fmt17(r.lambda)
               << ",\"T_lambda\":" << io::fmt17(r.T_lambda)
               << ",\"sup_error\":" << io::fmt17(r.sup_error)
               << ",\"argmax_t\":" << io::fmt17(r.argmax_t)
               << ",\"max_norm\":" << io::fmt17(r.max_norm)
               << ",\"a0_plateau\":" << io::fmt17(r.a0_plateau)
               << ",\"wall_ms\":" << io::fmt17(r.wall_ms) << ",\"diagnostics\":{";
            bool first = true;
            for (const auto& [k, v] : r.diagnostics) {
                if (!first) os << ",";
                first = false;
                os << "\"" << io::json_escape(k) << "\":" << io::fmt17(v);
            }
            os << "}}";
        }
        os << "]}";
        return os.str();
    }
};

inline std::string model_summary_json(const SystemModel& m) {
    std::ostringstream os;
    double w_lo = 0.0, w_hi = 0.0;
    if (m.omega.size() > 0) {
        w_lo = m.omega.minCoeff();
        w_hi = m.omega.maxCoeff();
    }
    os << "{\"n0\":" << m.n0 << ",\"n1\":" << m.n1 << ",\"seed\":" << m.seed
       << ",\"lambda\":" << io::fmt17(m.lambda) << ",\"omega_min\":" << io::fmt17(w_lo)
       << ",\"omega_max\":" << io::fmt17(w_hi)
       << ",\"coupling_norm\":" << io::fmt17(opalg::op_norm(m.A)) << "}";
    return os.str();
}

/// a_n(t): nested simplex integrals of the free-evolution correlation norms;
/// a_0(t) = int_0^t ||A01 U_x A10|| dx. Cost grows as grid^(n+1), so n <= 2.
inline double correlation_integral(const SystemModel& m, int n, double t,
                                   const QuadratureConfig& qc) {
    if (n < 0 || n > 2)
        throw Unsupported("correlation_integral: only n in {0, 1, 2} is supported");
    if (t < 0.0) throw ConstructionError("correlation_integral: t must be >= 0");
    if (t == 0.0) return 0.0;
    const Operator a01 = m.A.topRightCorner(m.n0, m.n1);
    const Operator a10 = m.A.bottomLeftCorner(m.n1, m.n0);
    const Operator a11 = m.A.bottomRightCorner(m.n1, m.n1);
    if (a01.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    const RVector w_env = m.omega.tail(m.n1);
    auto env_phase = [&](double s) {
        CVector d(m.n1);
        for (int k = 0; k < m.n1; ++k) d(k) = std::exp(Complex(0, w_env(k) * s));
        return d;
    };
    if (n == 0) {
        auto f = [&](double x) {
            return opalg::op_norm(Operator(a01 * env_phase(x).asDiagonal() * a10));
        };
        const auto p = quadrature::Panelization::uniform(0.0, t, qc.nodes_per_unit_T,
                                                         qc.quad_scheme);
        return quadrature::integrate_1d(f, p);
    }
    if (n == 1) {
        auto f = [&](double t0, double t1) {
            return opalg::op_norm(Operator(a01 * env_phase(t0 - t1).asDiagonal() *
                                           a11 * env_phase(t1).asDiagonal() * a10));
        };
        return quadrature::integrate_ordered_2d(f, 0.0, t, qc.nodes_per_unit_T,
                                                qc.quad_scheme);
    }
    auto outer = [&](double t0) {
        auto inner = [&](double t1, double t2) {
            return opalg::op_norm(
                Operator(a01 * env_phase(t0 - t1).asDiagonal() * a11 *
                         env_phase(t1 - t2).asDiagonal() * a11 *
                         env_phase(t2).asDiagonal() * a10));
        };
        if (t0 == 0.0) return 0.0;
        return quadrature::integrate_ordered_2d(inner, 0.0, t0, qc.nodes_per_unit_T,
                                                qc.quad_scheme);
    };
    const auto p =
        quadrature::Panelization::uniform(0.0, t, qc.nodes_per_unit_T, qc.quad_scheme);
    return quadrature::integrate_1d(outer, p);
}

/// E(lambda) sweep: for each lambda, the max over a uniform grid of
/// t in [0, tau_bar/lambda^2] of ||W^l_t - exp{(Z0+l A00+l^2 K) t}|| with K
/// built from the spec at T = transition_time(lambda).
inline ExperimentResult convergence_experiment(
    const std::function<SystemModel(double)>& model_of_lambda,
    const generators::GeneratorSpec& spec, const generators::TransitionTime& tt,
    std::vector<double> lambda_grid, double tau_bar, int time_nodes) {
    if (tau_bar <= 0.0)
        throw ConstructionError("convergence_experiment: tau_bar must be > 0");
    if (time_nodes < 2)
        throw ConstructionError("convergence_experiment: need at least 2 time nodes");
    if (lambda_grid.empty())
        throw ConstructionError("convergence_experiment: empty lambda grid");
    for (double l : lambda_grid)
        if (l == 0.0 || !(std::abs(l) <= 1.0))
            throw ConstructionError(
                "convergence_experiment: lambda grid entries must be nonzero with |lambda| <= 1");
    std::sort(lambda_grid.begin(), lambda_grid.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    const auto t_start = std::chrono::steady_clock::now();
    ExperimentResult res;
    res.experiment = "convergence";
    res.lambda_grid = lambda_grid;
    res.tau_bar = tau_bar;
    res.time_nodes = time_nodes;
    res.qc = spec.qc;
    for (double lambda : lambda_grid) {
        const auto row_start = std::chrono::steady_clock::now();
        SystemModel m = model_of_lambda(lambda);
        m.lambda = lambda;
        const Propagators props(m);
        if (res.model_summary.empty()) res.model_summary = model_summary_json(m);
        double t_scale = 0.0;
        Operator k;
        const bool coupled =
            m.A.topRightCorner(m.n0, m.n1).cwiseAbs().maxCoeff() > 0.0;
        if (coupled) {
            t_scale = generators::transition_time(tt, m, lambda);
            k = generators::build_generator(props,
                                            generators::with_transition_time(spec, t_scale));
        } else {
            k = Operator::Zero(m.dim(), m.dim());
        }
        const double t_max = tau_bar / (lambda * lambda);
        std::vector<double> errs(time_nodes);
        std::vector<double> approx_norms(time_nodes);
        parallel_for(time_nodes, [&](int i) {
            const double t = t_max * i / (time_nodes - 1);
            const Operator approx =
                compress0(generators::semigroup_approx(m, k, t), m.n0);
            const Operator exact = compress0(props.exact_projected(t), m.n0);
            errs[i] = opalg::op_norm(Operator(exact - approx));
            approx_norms[i] = opalg::op_norm(approx);
        });
        ResultRow row;
        row.lambda = lambda;
        row.T_lambda = t_scale;
        row.sup_error = -1.0;
        for (int i = 0; i < time_nodes; ++i) {
            if (errs[i] > row.sup_error) {
                row.sup_error = errs[i];
                row.argmax_t = t_max * i / (time_nodes - 1);
            }
            row.max_norm = std::max(row.max_norm, approx_norms[i]);
        }
        row.a0_plateau = coupled
                             ? correlation_integral(m, 0, spec.qc.x_max_factor *
                                                              std::max(t_scale, 1.0),
                                                    spec.qc)
                             : 0.0;
        row.diagnostics["generator_norm"] = opalg::op_norm(k);
        row.diagnostics["grid_lipschitz_bound"] =
            opalg::op_norm(m.Z() + lambda * m.A) +
            opalg::op_norm(Operator(compress0(m.Z() + lambda * m.A_block(0, 0) +
                                                  lambda * lambda * k,
                                              m.n0)));
        row.diagnostics["grid_step"] = t_max / (time_nodes - 1);
        if (auto tb = generators::tail_bound(props, spec))
            row.diagnostics["tail_bound"] = *tb;
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - row_start)
                          .count();
        res.rows.push_back(std::move(row));
    }
    res.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    return res;
}

struct ContractionScan {
    double max_norm = 0.0;
    double argmax_t = 0.0;
    std::vector<double> norms;  // per grid node
};

/// max over t in [0, t_max] (uniform grid) of ||exp{(Z0+l A00+l^2 K) t}||.
inline ContractionScan contraction_scan(const SystemModel& model, const Operator& k,
                                        double lambda, double t_max, int t_nodes) {
    if (t_max <= 0.0) throw ConstructionError("contraction_scan: t_max must be > 0");
    if (t_nodes < 2) throw ConstructionError("contraction_scan: need >= 2 nodes");
    SystemModel m = model;
    m.lambda = lambda;
    ContractionScan scan;
    scan.norms.resize(t_nodes);
    parallel_for(t_nodes, [&](int i) {
        const double t = t_max * i / (t_nodes - 1);
        scan.norms[i] =
            opalg::op_norm(compress0(generators::semigroup_approx(m, k, t), m.n0));
    });
    for (int i = 0; i < t_nodes; ++i) {
        if (scan.norms[i] > scan.max_norm) {
            scan.max_norm = scan.norms[i];
            scan.argmax_t = t_max * i / (t_nodes - 1);
        }
    }
    return scan;
}

struct DissipativityReport {
    double min_slack = 0.0;  // min over samples of ||(1 - a G) b|| - ||b||
    double worst_alpha = 0.0;
    int samples = 0;
    bool passed(double floor = -1e-8) const { return min_slack >= floor; }
};

/// Resolvent-inequality check ||(1 - alpha G) b|| >= ||b|| on seeded random
/// unit vectors, for each sampled alpha > 0.
inline DissipativityReport dissipativity_check(const Operator& g,
                                               const std::vector<double>& alpha_samples,
                                               int vec_samples, std::uint64_t seed) {
    opalg::require_square(g, "dissipativity_check");
    DissipativityReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    const Eigen::Index n = g.rows();
    const Operator id = Operator::Identity(n, n);
    for (double alpha : alpha_samples) {
        if (alpha <= 0.0)
            throw ConstructionError("dissipativity_check: alpha samples must be > 0");
        const Operator resolvent_factor = id - alpha * g;
        for (int s = 0; s < vec_samples; ++s) {
            CVector b(n);
            for (Eigen::Index i = 0; i < n; ++i) b(i) = rng.complex_normal();
            b /= b.norm();
            const double slack = (resolvent_factor * b).norm() - 1.0;
            ++rep.samples;
            if (slack < rep.min_slack) {
                rep.min_slack = slack;
                rep.worst_alpha = alpha;
            }
        }
    }
    return rep;
}

struct CommutatorIsometryReport {
    double skew_residual_inputs = 0.0;
    double skew_residual_commutator = 0.0;
    double max_norm_deviation = 0.0;  // max_t | ||exp([D1,D2] t)|| - 1 |
    bool pass(double tol = 1e-9) const { return max_norm_deviation <= tol; }
};

/// [D1, D2] of two isometry generators generates isometries: checks skewness
/// of the commutator and norm-1 of its exponential at each sampled t, both signs.
inline CommutatorIsometryReport commutator_isometry_check(
    const Operator& d1, const Operator& d2, const std::vector<double>& t_samples) {
    opalg::require_square(d1, "commutator_isometry_check");
    opalg::require_square(d2, "commutator_isometry_check");
    const double r1 = opalg::op_norm(Operator(d1 + d1.adjoint()));
    const double r2 = opalg::op_norm(Operator(d2 + d2.adjoint()));
    const double scale = std::max({1.0, opalg::op_norm(d1), opalg::op_norm(d2)});
    if (r1 > 1e-10 * scale || r2 > 1e-10 * scale)
        throw InvalidGenerator(
            "commutator_isometry_check: inputs must be skew-Hermitian within 1e-10");
    CommutatorIsometryReport rep;
    rep.skew_residual_inputs = std::max(r1, r2);
    const Operator c = d1 * d2 - d2 * d1;
    rep.skew_residual_commutator = opalg::op_norm(Operator(c + c.adjoint()));
    for (double t : t_samples)
        for (double sign : {1.0, -1.0})
            rep.max_norm_deviation =
                std::max(rep.max_norm_deviation,
                         std::abs(opalg::op_norm(opalg::expm(c, sign * t)) - 1.0));
    return rep;
}

} // namespace wcl::analysis
