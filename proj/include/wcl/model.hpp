#pragma once

// Finite-dimensional system models: a diagonal free generator Z = i diag(w),
// a skew-Hermitian perturbation A, and the coordinate projector P0 onto the
// first n0 axes. With these choices [Z, P0] = 0 holds exactly and every
// one-parameter group in play is a group of isometries in the spectral norm.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcl/errors.hpp"
#include "wcl/io.hpp"
#include "wcl/opalg.hpp"
#include "wcl/rng.hpp"

namespace wcl {

enum class QuadScheme { CompositeSimpson, GaussLegendrePanels };

inline std::string to_string(QuadScheme s) {
    return s == QuadScheme::CompositeSimpson ? "composite-simpson"
                                             : "gauss-legendre-panels";
}

inline QuadScheme quad_scheme_from_string(const std::string& s) {
    if (s == "composite-simpson") return QuadScheme::CompositeSimpson;
    if (s == "gauss-legendre-panels") return QuadScheme::GaussLegendrePanels;
    throw ConstructionError("unknown quadrature scheme: " + s);
}

struct QuadratureConfig {
    double x_max_factor = 8.0;  // Gaussian-weighted integrals cut at x_max_factor * T
    int nodes_per_unit_T = 64;  // quadrature node density per unit time
    double expm_tol = 1e-12;
    double volterra_tol = 1e-10;
    QuadScheme quad_scheme = QuadScheme::GaussLegendrePanels;

    void validate() const {
        if (x_max_factor < 6.0)
            throw ConstructionError("QuadratureConfig: x_max_factor must be >= 6");
        if (nodes_per_unit_T < 16)
            throw ConstructionError("QuadratureConfig: nodes_per_unit_T must be >= 16");
        if (expm_tol <= 0 || volterra_tol <= 0)
            throw ConstructionError("QuadratureConfig: tolerances must be positive");
    }

    std::string to_json() const {
        std::ostringstream os;
        os << "{\"x_max_factor\":" << io::fmt17(x_max_factor)
           << ",\"nodes_per_unit_T\":" << nodes_per_unit_T
           << ",\"expm_tol\":" << io::fmt17(expm_tol)
           << ",\"volterra_tol\":" << io::fmt17(volterra_tol)
           << ",\"quad_scheme\":\"" << to_string(quad_scheme) << "\"}";
        return os.str();
    }

    static QuadratureConfig from_json(const nlohmann::json& j) {
        QuadratureConfig qc;
        if (j.contains("x_max_factor")) qc.x_max_factor = j["x_max_factor"].get<double>();
        if (j.contains("nodes_per_unit_T"))
            qc.nodes_per_unit_T = j["nodes_per_unit_T"].get<int>();
        if (j.contains("expm_tol")) qc.expm_tol = j["expm_tol"].get<double>();
        if (j.contains("volterra_tol")) qc.volterra_tol = j["volterra_tol"].get<double>();
        if (j.contains("quad_scheme"))
            qc.quad_scheme = quad_scheme_from_string(j["quad_scheme"].get<std::string>());
        qc.validate();
        return qc;
    }
};

struct SystemModel {
    int n0 = 0;
    int n1 = 0;
    RVector omega;  // n0 + n1 angular frequencies, Z = i diag(omega)
    Operator A;     // skew-Hermitian perturbation
    double lambda = 0.0;
    std::uint64_t seed = 0;

    int dim() const { return n0 + n1; }

    Operator P0() const {
        Operator p = Operator::Zero(dim(), dim());
        for (int k = 0; k < n0; ++k) p(k, k) = 1.0;
        return p;
    }

    Operator Z() const {
        Operator z = Operator::Zero(dim(), dim());
        for (int k = 0; k < dim(); ++k) z(k, k) = Complex(0.0, omega(k));
        return z;
    }

    // P_i A P_j embedded in the full dimension (coordinate projector, so a mask)
    Operator A_block(int i, int j) const {
        Operator b = Operator::Zero(dim(), dim());
        const int r_lo = (i == 0) ? 0 : n0;
        const int r_hi = (i == 0) ? n0 : dim();
        const int c_lo = (j == 0) ? 0 : n0;
        const int c_hi = (j == 0) ? n0 : dim();
        b.block(r_lo, c_lo, r_hi - r_lo, c_hi - c_lo) =
            A.block(r_lo, c_lo, r_hi - r_lo, c_hi - c_lo);
        return b;
    }
};

// operators supported on range(P0), stored full-dimension
inline Operator compress0(const Operator& m, int n0) { return m.topLeftCorner(n0, n0); }

inline Operator embed0(const Operator& small, int dim) {
    Operator m = Operator::Zero(dim, dim);
    m.topLeftCorner(small.rows(), small.cols()) = small;
    return m;
}

struct ValidationCheck {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    std::string to_string() const {
        std::ostringstream os;
        for (const auto& c : checks)
            os << (c.pass ? "  ok   " : "  FAIL ") << c.name << "  residual "
               << io::fmt17(c.residual) << "  (tol " << io::fmt17(c.tolerance) << ")\n";
        return os.str();
    }
};

inline ValidationReport validate_model(const SystemModel& m) {
    ValidationReport rep;
    auto add = [&](const std::string& name, double res, double tol) {
        rep.checks.push_back({name, res, tol, res <= tol});
    };
    const double skew = (m.A + m.A.adjoint()).cwiseAbs().maxCoeff();
    add("A skew-Hermitian (entrywise)", skew, 1e-12);
    const Operator z = m.Z();
    const Operator p0 = m.P0();
    add("[Z, P0] = 0", (z * p0 - p0 * z).cwiseAbs().maxCoeff(), 0.0);
    add("op_norm(P0) = 1", std::abs(opalg::op_norm(p0) - 1.0), 1e-12);
    double worst = 0.0;
    for (double t : {1.0, -1.0, 5.0, -5.0})
        worst = std::max(worst, std::abs(opalg::op_norm(opalg::expm(m.A, t)) - 1.0));
    add("exp(A t) isometry, t in {+-1, +-5}", worst, 1e-10);
    return rep;
}

inline void require_coupling_range(double lambda, const char* who) {
    if (!(std::abs(lambda) <= 1.0))
        throw ConstructionError(std::string(who) + ": |lambda| must be <= 1");
}

inline SystemModel build_random_model(std::uint64_t seed, int n0, int n1,
                                      double omega_band, double coupling_scale,
                                      double lambda = 0.1) {
    if (n0 < 1 || n1 < 1) throw ConstructionError("build_random_model: need n0, n1 >= 1");
    require_coupling_range(lambda, "build_random_model");
    SystemModel m;
    m.n0 = n0;
    m.n1 = n1;
    m.lambda = lambda;
    m.seed = seed;
    Rng rng(seed);
    const int n = n0 + n1;
    m.omega.resize(n);
    for (int k = 0; k < n; ++k) m.omega(k) = rng.uniform(-omega_band, omega_band);
    Operator g(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g(r, c) = rng.complex_normal();
    m.A = (g - g.adjoint()) / 2.0;
    if (coupling_scale == 0.0) {
        m.A.setZero();
    } else {
        m.A *= coupling_scale / opalg::op_norm(m.A);
    }
    return m;
}

// Finite quasi-continuum: equispaced environment spectrum across the band and
// a smooth coupling profile, so that ||A01 U_x A10|| decays over a window
// x ~ n1/bandwidth before the discrete-spectrum recurrence at 2*pi*(n1-1)/bandwidth.
inline SystemModel build_quasi_continuum_model(std::uint64_t seed, int n0, int n1,
                                               double bandwidth, double profile_width,
                                               double coupling_scale,
                                               double lambda = 0.1) {
    if (n0 < 1 || n1 < 1)
        throw ConstructionError("build_quasi_continuum_model: need n0, n1 >= 1");
    require_coupling_range(lambda, "build_quasi_continuum_model");
    if (bandwidth <= 0)
        throw ConstructionError("build_quasi_continuum_model: bandwidth must be positive");
    SystemModel m;
    m.n0 = n0;
    m.n1 = n1;
    m.lambda = lambda;
    m.seed = seed;
    Rng rng(seed);
    const int n = n0 + n1;
    m.omega.resize(n);
    for (int k = 0; k < n0; ++k) m.omega(k) = rng.uniform(-bandwidth / 4, bandwidth / 4);
    for (int j = 0; j < n1; ++j)
        m.omega(n0 + j) =
            (n1 == 1) ? 0.0 : -bandwidth / 2 + j * bandwidth / (n1 - 1);
    auto profile = [&](double w) {
        const double y = w / profile_width;
        return std::exp(-0.5 * y * y);
    };
    // Couplings must vary smoothly with the environment frequency or the
    // correlation kernel keeps a white-noise floor instead of decaying.
    // Randomness enters per system row: a complex amplitude and a time shift.
    Operator g = Operator::Zero(n, n);
    for (int r = 0; r < n0; ++r)
        for (int c = 0; c < n0; ++c) g(r, c) = rng.complex_normal();
    g.topLeftCorner(n0, n0) /= 2.0 * std::sqrt(static_cast<double>(n0));
    for (int r = 0; r < n1; ++r)
        for (int c = 0; c < n1; ++c) g(n0 + r, n0 + c) = rng.complex_normal();
    g.bottomRightCorner(n1, n1) /= 2.0 * std::sqrt(static_cast<double>(n1));
    double profile_sq = 0.0;
    for (int j = 0; j < n1; ++j) {
        const double p = profile(m.omega(n0 + j));
        profile_sq += p * p;
    }
    const double row_scale = (profile_sq > 0.0) ? 1.0 / std::sqrt(profile_sq) : 1.0;
    const double shift_max = 2.0 / std::min(profile_width, bandwidth);
    for (int k = 0; k < n0; ++k) {
        const Complex amp = rng.complex_normal();
        const double shift = rng.uniform(0.0, shift_max);
        for (int j = 0; j < n1; ++j) {
            const double w_env = m.omega(n0 + j);
            g(k, n0 + j) = amp * row_scale * profile(w_env) *
                           std::exp(Complex(0, w_env * shift));
        }
    }
    m.A = (g - g.adjoint()) / 2.0;
    if (coupling_scale == 0.0) {
        m.A.setZero();
    } else {
        m.A *= coupling_scale / opalg::op_norm(m.A);
    }
    return m;
}

inline std::string model_to_json(const SystemModel& m) {
    std::ostringstream os;
    os << "{\"schema\":\"" << io::kSchemaVersion << "\",";
    os << "\"n0\":" << m.n0 << ",\"n1\":" << m.n1 << ",";
    os << "\"omega\":" << io::real_array_json(m.omega.data(), m.omega.size()) << ",";
    os << "\"A\":" << io::matrix_json(m.A) << ",";
    os << "\"lambda\":" << io::fmt17(m.lambda) << ",";
    os << "\"seed\":" << m.seed << "}";
    return os.str();
}

inline SystemModel model_from_json(const nlohmann::json& j) {
    SystemModel m;
    m.n0 = j.at("n0").get<int>();
    m.n1 = j.at("n1").get<int>();
    if (m.n0 < 1 || m.n1 < 0) throw ConstructionError("model JSON: bad dimensions");
    const int n = m.n0 + m.n1;
    const auto& om = j.at("omega");
    if (static_cast<int>(om.size()) != n)
        throw ConstructionError("model JSON: omega length mismatch");
    m.omega.resize(n);
    for (int k = 0; k < n; ++k) m.omega(k) = om[k].get<double>();
    const auto& re = j.at("A").at("re");
    const auto& im = j.at("A").at("im");
    if (static_cast<int>(re.size()) != n || static_cast<int>(im.size()) != n)
        throw ConstructionError("model JSON: A dimension mismatch");
    m.A.resize(n, n);
    for (int r = 0; r < n; ++r) {
        if (static_cast<int>(re[r].size()) != n || static_cast<int>(im[r].size()) != n)
            throw ConstructionError("model JSON: A row length mismatch");
        for (int c = 0; c < n; ++c)
            m.A(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
    }
    m.lambda = j.at("lambda").get<double>();
    require_coupling_range(m.lambda, "model JSON");
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

inline SystemModel model_from_json_text(const std::string& text) {
    return model_from_json(nlohmann::json::parse(text));
}

} // namespace wcl
