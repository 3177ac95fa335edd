#pragma once

// Markovian generators of the weak-coupling machinery:
//   K_D            one-sided kernel integral with a hard cutoff x_max
//   K_{(a,q,T)}    Gaussian-damped two-parameter family
//   K_T            dynamical time average, in three equivalent forms
//   K natural      spectral average sum_a Q_a K Q_a
//   K~_T           contraction decomposition 1/2 (C - C00)^2 + commutator part
// plus transition-time rules and semigroup propagation on range(P0).

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "wcl/errors.hpp"
#include "wcl/model.hpp"
#include "wcl/opalg.hpp"
#include "wcl/propagate.hpp"
#include "wcl/quadrature.hpp"

namespace wcl::generators {

inline constexpr double kSqrtPi = 1.7724538509055160273;

namespace detail {

// compressed coupling blocks with free-picture phase helpers; everything the
// generator integrands need is O(n0 n1) per node plus one small product
struct CouplingBlocks {
    Operator a01;   // n0 x n1
    Operator a10;   // n1 x n0
    RVector w_sys;  // n0
    RVector w_env;  // n1

    explicit CouplingBlocks(const SystemModel& m)
        : a01(m.A.topRightCorner(m.n0, m.n1)),
          a10(m.A.bottomLeftCorner(m.n1, m.n0)),
          w_sys(m.omega.head(m.n0)),
          w_env(m.omega.tail(m.n1)) {}

    bool zero() const { return a01.cwiseAbs().maxCoeff() == 0.0; }

    // (U_{-t} A01 U_t) block: entry (j, k) picks up e^{i (w_env_k - w_sys_j) t}
    Operator a01_at(double t) const {
        Operator out = a01;
        for (Eigen::Index j = 0; j < out.rows(); ++j)
            for (Eigen::Index k = 0; k < out.cols(); ++k)
                out(j, k) *= std::exp(Complex(0, (w_env(k) - w_sys(j)) * t));
        return out;
    }

    Operator a10_at(double t) const {
        Operator out = a10;
        for (Eigen::Index j = 0; j < out.rows(); ++j)
            for (Eigen::Index k = 0; k < out.cols(); ++k)
                out(j, k) *= std::exp(Complex(0, (w_sys(k) - w_env(j)) * t));
        return out;
    }

    // U_{s_left} A01 U_x A10 U_{s_right} on range(P0)
    Operator sandwich(double s_left, double x, double s_right) const {
        Operator left = a01;
        for (Eigen::Index j = 0; j < left.rows(); ++j)
            for (Eigen::Index k = 0; k < left.cols(); ++k)
                left(j, k) *= std::exp(Complex(0, w_sys(j) * s_left + w_env(k) * x));
        Operator v = left * a10;
        for (Eigen::Index c = 0; c < v.cols(); ++c)
            v.col(c) *= std::exp(Complex(0, w_sys(c) * s_right));
        return v;
    }
};

} // namespace detail

/// K_D = int_0^{x_max} U_{-x} A01 U_x A10 dx. For discrete spectra the
/// infinite integral does not converge, so the cutoff is a mandatory,
/// explicit regularization choice.
inline Operator davies_generator(const Propagators& props, double x_max,
                                 const QuadratureConfig& qc) {
    if (x_max <= 0.0) throw ConstructionError("davies_generator: x_max must be > 0");
    const SystemModel& m = props.model();
    const detail::CouplingBlocks cb(m);
    if (cb.zero()) return Operator::Zero(m.dim(), m.dim());
    auto f = [&](double x) -> Operator { return cb.sandwich(-x, x, 0.0); };
    const auto p = quadrature::Panelization::uniform(0.0, x_max, qc.nodes_per_unit_T,
                                                     qc.quad_scheme);
    return embed0(quadrature::integrate_1d(f, p), m.dim());
}

/// K_{(alpha,q,T)} = int_0^inf dx e^{-(x/2)^2/T^2}
///                   U_{-(alpha+1/2)x+q} A01 U_x A10 U_{(alpha-1/2)x-q},
/// truncated at x_max_factor * T.
inline Operator family_generator(const Propagators& props, double alpha, double q,
                                 double T, const QuadratureConfig& qc) {
    if (T <= 0.0) throw InvalidTimescale("family_generator: T must be > 0");
    const SystemModel& m = props.model();
    const detail::CouplingBlocks cb(m);
    if (cb.zero()) return Operator::Zero(m.dim(), m.dim());
    auto f = [&](double x) -> Operator {
        const double damp = std::exp(-0.25 * x * x / (T * T));
        return damp * cb.sandwich(-(alpha + 0.5) * x + q, x, (alpha - 0.5) * x - q);
    };
    const auto p = quadrature::Panelization::uniform(
        0.0, qc.x_max_factor * T, qc.nodes_per_unit_T, qc.quad_scheme);
    return embed0(quadrature::integrate_1d(f, p), m.dim());
}

enum class DynAvgForm { QAverage, OrderedDouble, TimeOrdered };

inline std::string to_string(DynAvgForm f) {
    switch (f) {
        case DynAvgForm::QAverage: return "q-average";
        case DynAvgForm::OrderedDouble: return "ordered-double";
        default: return "time-ordered";
    }
}

inline DynAvgForm dyn_avg_form_from_string(const std::string& s) {
    if (s == "q-average") return DynAvgForm::QAverage;
    if (s == "ordered-double") return DynAvgForm::OrderedDouble;
    if (s == "time-ordered") return DynAvgForm::TimeOrdered;
    throw ConstructionError("unknown dynamical-average form: " + s);
}

/// K_T in the selected form; all three are the same operator up to
/// quadrature error:
///   q-average       (1/sqrt(pi) T) int dq e^{-q^2/T^2} U_q K_{(0,0,T)} U_{-q}
///   ordered-double  (1/sqrt(pi) T) int dt1 e^{-t1^2/2T^2} A01(t1)
///                                  int_{-inf}^{t1} dt2 e^{-t2^2/2T^2} A10(t2)
///   time-ordered    (1/(2 sqrt(pi) T)) iint dt1 dt2 e^{-(t1^2+t2^2)/2T^2}
///                                      T[A01 A10](t1, t2)
inline Operator dyn_avg_generator(const Propagators& props, double T, DynAvgForm form,
                                  const QuadratureConfig& qc) {
    if (T <= 0.0) throw InvalidTimescale("dyn_avg_generator: T must be > 0");
    const SystemModel& m = props.model();
    const int n = m.dim();
    const detail::CouplingBlocks cb(m);
    if (cb.zero()) return Operator::Zero(n, n);
    const double x_max = qc.x_max_factor * T;
    const double norm = 1.0 / (kSqrtPi * T);
    switch (form) {
        case DynAvgForm::QAverage: {
            const Operator k0 =
                compress0(family_generator(props, 0.0, 0.0, T, qc), m.n0);
            auto f = [&](double q) -> Operator {
                const double damp = std::exp(-q * q / (T * T));
                Operator v = k0;  // U_q K0 U_{-q}
                for (Eigen::Index r = 0; r < v.rows(); ++r)
                    for (Eigen::Index c = 0; c < v.cols(); ++c)
                        v(r, c) *= std::exp(Complex(0, (cb.w_sys(r) - cb.w_sys(c)) * q));
                return damp * v;
            };
            const auto p = quadrature::Panelization::uniform(
                -x_max, x_max, qc.nodes_per_unit_T, qc.quad_scheme);
            return embed0(norm * quadrature::integrate_1d(f, p), n);
        }
        case DynAvgForm::OrderedDouble: {
            auto g = [&](double t1) -> Operator {
                return std::exp(-0.5 * t1 * t1 / (T * T)) * cb.a01_at(t1);
            };
            auto h = [&](double t2) -> Operator {
                return std::exp(-0.5 * t2 * t2 / (T * T)) * cb.a10_at(t2);
            };
            return embed0(norm * quadrature::integrate_ordered_separable(
                                     g, h, -x_max, x_max, qc.nodes_per_unit_T,
                                     qc.quad_scheme),
                          n);
        }
        default: {  // TimeOrdered
            auto gauss = [&](double t) { return std::exp(-0.5 * t * t / (T * T)); };
            const auto outer = quadrature::Panelization::uniform(
                -x_max, x_max, qc.nodes_per_unit_T, qc.quad_scheme);
            Operator acc = Operator::Zero(m.n0, m.n0);
            outer.for_each_node([&](std::size_t, double t1, double w1) {
                Operator below = Operator::Zero(m.n1, m.n0);
                if (t1 > -x_max) {
                    auto fb = [&](double t2) -> Operator {
                        return gauss(t2) * cb.a10_at(t2);
                    };
                    const auto pb = quadrature::Panelization::uniform(
                        -x_max, t1, qc.nodes_per_unit_T, QuadScheme::GaussLegendrePanels);
                    below = quadrature::integrate_1d(fb, pb);
                }
                Operator above = Operator::Zero(m.n0, m.n1);
                if (t1 < x_max) {
                    auto fa = [&](double t2) -> Operator {
                        return gauss(t2) * cb.a01_at(t2);
                    };
                    const auto pa = quadrature::Panelization::uniform(
                        t1, x_max, qc.nodes_per_unit_T, QuadScheme::GaussLegendrePanels);
                    above = quadrature::integrate_1d(fa, pa);
                }
                acc += (w1 * gauss(t1)) * (cb.a01_at(t1) * below + above * cb.a10_at(t1));
            });
            return embed0(0.5 * norm * acc, n);
        }
    }
}

/// sum_a Q_a K Q_a, with Q_a the coordinate projectors of the range(P0)
/// frequency clusters (single linkage, adjacent sorted gap <= delta_omega).
inline Operator spectral_average(const Operator& k, const SystemModel& m,
                                 double delta_omega) {
    if (delta_omega < 0.0)
        throw ConstructionError("spectral_average: delta_omega must be >= 0");
    const int n0 = m.n0;
    std::vector<int> order(n0);
    for (int i = 0; i < n0; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return m.omega(a) < m.omega(b); });
    std::vector<int> cluster(n0, 0);
    int current = 0;
    for (int i = 0; i < n0; ++i) {
        if (i > 0 && m.omega(order[i]) - m.omega(order[i - 1]) > delta_omega) ++current;
        cluster[order[i]] = current;
    }
    Operator out = Operator::Zero(k.rows(), k.cols());
    for (int r = 0; r < n0; ++r)
        for (int c = 0; c < n0; ++c)
            if (cluster[r] == cluster[c]) out(r, c) = k(r, c);
    return out;
}

struct TildeParts {
    Operator dissipative;   // 1/2 (C - C00)^2, full dimension
    Operator conservative;  // 1/2 iint_{t2<=t1} [Psi(t1), Psi(t2)], skew-Hermitian
};

/// Decomposition K~_T with Phi(t) = sqrt(1/(sqrt(pi) T)) e^{-t^2/2T^2}
/// U_{-t} A U_t and Psi = Phi - Phi00. P0 (dissipative + conservative) P0
/// reproduces the ordered-double K_T on the same panelization.
inline TildeParts tilde_decomposition(const Propagators& props, double T,
                                      const QuadratureConfig& qc) {
    if (T <= 0.0) throw InvalidTimescale("tilde_decomposition: T must be > 0");
    const SystemModel& m = props.model();
    const int n = m.dim();
    const double x_max = qc.x_max_factor * T;
    const double c_t = std::sqrt(1.0 / (kSqrtPi * T));
    auto phi = [&](double t) -> Operator {
        return (c_t * std::exp(-0.5 * t * t / (T * T))) * props.free_conj(m.A, t);
    };
    auto psi = [&](double t) -> Operator {
        Operator p = phi(t);
        p.topLeftCorner(m.n0, m.n0).setZero();
        return p;
    };
    TildeParts parts;
    if (m.A.cwiseAbs().maxCoeff() == 0.0) {
        parts.dissipative = Operator::Zero(n, n);
        parts.conservative = Operator::Zero(n, n);
        return parts;
    }
    const auto p = quadrature::Panelization::uniform(-x_max, x_max,
                                                     qc.nodes_per_unit_T, qc.quad_scheme);
    const Operator c = quadrature::integrate_1d(phi, p);
    Operator c_minus_c00 = c;
    c_minus_c00.topLeftCorner(m.n0, m.n0).setZero();
    parts.dissipative = 0.5 * (c_minus_c00 * c_minus_c00);
    parts.conservative = 0.5 * quadrature::integrate_ordered_commutator(
                                   psi, -x_max, x_max, qc.nodes_per_unit_T,
                                   qc.quad_scheme);
    return parts;
}

struct TransitionTime {
    enum class Rule { Natural, PowerLaw };
    Rule rule = Rule::Natural;
    double xi = 1.0;      // power-law exponent, 0 < xi < 2 strictly
    double T_ref = 1.0;   // power-law reference time

    void validate() const {
        if (rule == Rule::PowerLaw && (xi <= 0.0 || xi >= 2.0))
            throw ConstructionError("TransitionTime: xi must lie strictly in (0, 2)");
        if (rule == Rule::PowerLaw && T_ref <= 0.0)
            throw ConstructionError("TransitionTime: T_ref must be > 0");
    }
};

/// T(lambda): the natural rule 1/(|lambda| ||A||) or T_ref |lambda|^{-xi}.
inline double transition_time(const TransitionTime& tt, const SystemModel& m,
                              double lambda) {
    tt.validate();
    if (lambda == 0.0)
        throw CouplingZero("transition_time: T(0) is infinite; use a finite lambda");
    if (tt.rule == TransitionTime::Rule::Natural) {
        const double a_norm = opalg::op_norm(m.A);
        if (a_norm == 0.0)
            throw InvalidTimescale("transition_time: A = 0 has no natural scale");
        return 1.0 / (std::abs(lambda) * a_norm);
    }
    return tt.T_ref * std::pow(std::abs(lambda), -tt.xi);
}

/// exp{(Z0 + lambda A00 + lambda^2 K) t} on range(P0), embedded.
inline Operator semigroup_approx(const SystemModel& m, const Operator& k, double t,
                                 double expm_tol = 1e-12) {
    const int n0 = m.n0;
    Operator gen = Operator::Zero(n0, n0);
    for (int i = 0; i < n0; ++i) gen(i, i) = Complex(0, m.omega(i));
    gen += m.lambda * m.A.topLeftCorner(n0, n0);
    gen += (m.lambda * m.lambda) * k.topLeftCorner(n0, n0);
    return embed0(opalg::expm(gen, t, expm_tol), m.dim());
}

// ---- generator specifications (CLI / experiment configs) ----

struct GeneratorSpec {
    enum class Kind { Davies, Family, DynAvg, SpectralAvg };
    Kind kind = Kind::DynAvg;
    double x_max = 0.0;                       // Davies
    double alpha = 0.0, q = 0.0;              // Family
    double T = 1.0;                           // Family / DynAvg
    DynAvgForm form = DynAvgForm::OrderedDouble;
    double delta_omega = 0.0;                 // SpectralAvg
    std::shared_ptr<GeneratorSpec> base;      // SpectralAvg
    QuadratureConfig qc;

    std::string kind_name() const {
        switch (kind) {
            case Kind::Davies: return "davies";
            case Kind::Family: return "family";
            case Kind::DynAvg: return "dynavg";
            default: return "spectralavg";
        }
    }

    std::string to_json() const {
        std::ostringstream os;
        os << "{\"kind\":\"" << kind_name() << "\"";
        switch (kind) {
            case Kind::Davies: os << ",\"x_max\":" << io::fmt17(x_max); break;
            case Kind::Family:
                os << ",\"alpha\":" << io::fmt17(alpha) << ",\"q\":" << io::fmt17(q)
                   << ",\"T\":" << io::fmt17(T);
                break;
            case Kind::DynAvg:
                os << ",\"T\":" << io::fmt17(T) << ",\"form\":\"" << to_string(form)
                   << "\"";
                break;
            case Kind::SpectralAvg:
                os << ",\"delta_omega\":" << io::fmt17(delta_omega)
                   << ",\"base\":" << (base ? base->to_json() : "null");
                break;
        }
        os << ",\"qc\":" << qc.to_json() << "}";
        return os.str();
    }

    static GeneratorSpec from_json(const nlohmann::json& j) {
        GeneratorSpec s;
        const std::string kind = j.at("kind").get<std::string>();
        if (j.contains("qc")) s.qc = QuadratureConfig::from_json(j["qc"]);
        if (kind == "davies") {
            s.kind = Kind::Davies;
            s.x_max = j.at("x_max").get<double>();
        } else if (kind == "family") {
            s.kind = Kind::Family;
            s.alpha = j.at("alpha").get<double>();
            s.q = j.at("q").get<double>();
            s.T = j.at("T").get<double>();
        } else if (kind == "dynavg") {
            s.kind = Kind::DynAvg;
            s.T = j.at("T").get<double>();
            if (j.contains("form"))
                s.form = dyn_avg_form_from_string(j["form"].get<std::string>());
        } else if (kind == "spectralavg") {
            s.kind = Kind::SpectralAvg;
            s.delta_omega = j.at("delta_omega").get<double>();
            s.base = std::make_shared<GeneratorSpec>(from_json(j.at("base")));
        } else {
            throw ConstructionError("unknown generator kind: " + kind);
        }
        return s;
    }
};

inline Operator build_generator(const Propagators& props, const GeneratorSpec& spec) {
    switch (spec.kind) {
        case GeneratorSpec::Kind::Davies:
            return davies_generator(props, spec.x_max, spec.qc);
        case GeneratorSpec::Kind::Family:
            return family_generator(props, spec.alpha, spec.q, spec.T, spec.qc);
        case GeneratorSpec::Kind::DynAvg:
            return dyn_avg_generator(props, spec.T, spec.form, spec.qc);
        default: {
            if (!spec.base)
                throw ConstructionError("spectralavg spec needs a base generator");
            const Operator base = build_generator(props, *spec.base);
            return spectral_average(base, props.model(), spec.delta_omega);
        }
    }
}

/// Copy of the spec with the transition-time scale substituted (recursing
/// into a spectral average's base). Davies keeps its explicit x_max.
inline GeneratorSpec with_transition_time(const GeneratorSpec& spec, double T) {
    GeneratorSpec out = spec;
    if (out.kind == GeneratorSpec::Kind::Family ||
        out.kind == GeneratorSpec::Kind::DynAvg)
        out.T = T;
    if (out.kind == GeneratorSpec::Kind::SpectralAvg && out.base)
        out.base = std::make_shared<GeneratorSpec>(with_transition_time(*out.base, T));
    return out;
}

/// Gaussian truncation-tail estimate ||A01|| ||A10|| sqrt(pi) T erfc(x_max_factor/2)
/// for the damped kinds; absent for the hard-cutoff Davies generator.
inline std::optional<double> tail_bound(const Propagators& props,
                                        const GeneratorSpec& spec) {
    const SystemModel& m = props.model();
    switch (spec.kind) {
        case GeneratorSpec::Kind::Davies: return std::nullopt;
        case GeneratorSpec::Kind::SpectralAvg:
            return spec.base ? tail_bound(props, *spec.base) : std::nullopt;
        default: {
            const double a01 = opalg::op_norm(m.A_block(0, 1));
            const double a10 = opalg::op_norm(m.A_block(1, 0));
            return a01 * a10 * kSqrtPi * spec.T * std::erfc(0.5 * spec.qc.x_max_factor);
        }
    }
}

} // namespace wcl::generators
