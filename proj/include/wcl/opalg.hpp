#pragma once

// Dense complex operator algebra: the matrix exponential, the spectral
// operator norm, and projector-block extraction. Everything below works on
// plain Eigen dense matrices; an Operator is a square complex matrix.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "wcl/errors.hpp"

namespace wcl {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

namespace opalg {

inline void require_square(const Operator& m, const char* who) {
    if (m.rows() != m.cols())
        throw InvalidOperator(std::string(who) + ": operator is not square");
}

inline void require_finite(const Operator& m, const char* who) {
    if (!m.allFinite())
        throw InvalidOperator(std::string(who) + ": operator has non-finite entries");
}

/// Spectral norm (largest singular value), the operator norm induced by the
/// Euclidean vector norm.
inline double op_norm(const Operator& m) {
    require_square(m, "op_norm");
    require_finite(m, "op_norm");
    if (m.rows() == 0) return 0.0;
    if (m.rows() == 1) return std::abs(m(0, 0));
    Eigen::JacobiSVD<Operator> svd(m);
    return svd.singularValues()(0);
}

inline bool is_projector(const Operator& p, double tol = 1e-12) {
    if (p.rows() != p.cols()) return false;
    const double idem = (p * p - p).cwiseAbs().maxCoeff();
    const double herm = (p - p.adjoint()).cwiseAbs().maxCoeff();
    return idem <= tol && herm <= tol;
}

/// P_i M P_j with P1 = 1 - P0, embedded in the full dimension.
inline Operator block(const Operator& m, int i, int j, const Operator& p0) {
    require_square(m, "block");
    require_finite(m, "block");
    if (!is_projector(p0))
        throw NotAProjector("block: P0 fails the orthogonal-projector check (tol 1e-12)");
    const Operator id = Operator::Identity(p0.rows(), p0.cols());
    const Operator left = (i == 0) ? p0 : Operator(id - p0);
    const Operator right = (j == 0) ? p0 : Operator(id - p0);
    return left * m * right;
}

namespace detail {

// Pade coefficients and 1-norm thresholds for the scaling-and-squaring
// exponential (orders 3..13, double precision backward-error bounds).
inline const std::vector<double>& pade_coeffs(int m) {
    static const std::vector<double> b3 = {120., 60., 12., 1.};
    static const std::vector<double> b5 = {30240., 15120., 3360., 420., 30., 1.};
    static const std::vector<double> b7 = {17297280., 8648640., 1995840., 277200.,
                                           25200.,    1512.,    56.,      1.};
    static const std::vector<double> b9 = {17643225600., 8821612800., 2075673600.,
                                           302702400.,   30270240.,   2162160.,
                                           110880.,      3960.,       90.,
                                           1.};
    static const std::vector<double> b13 = {64764752532480000., 32382376266240000.,
                                            7771770303897600.,  1187353796428800.,
                                            129060195264000.,   10559470521600.,
                                            670442572800.,      33522128640.,
                                            1323241920.,        40840800.,
                                            960960.,            16380.,
                                            182.,               1.};
    switch (m) {
        case 3: return b3;
        case 5: return b5;
        case 7: return b7;
        case 9: return b9;
        default: return b13;
    }
}

inline Operator pade_low_order(const Operator& a, int m) {
    const auto& b = pade_coeffs(m);
    const Eigen::Index n = a.rows();
    const Operator id = Operator::Identity(n, n);
    const Operator a2 = a * a;
    Operator even = b[0] * id;  // sum b_{2k} A^{2k}
    Operator odd = b[1] * id;   // sum b_{2k+1} A^{2k}, to be multiplied by A
    Operator pw = id;
    for (int k = 2; k <= m; k += 2) {
        pw = pw * a2;
        even += b[k] * pw;
        if (k + 1 <= m) odd += b[k + 1] * pw;
    }
    const Operator u = a * odd;
    return (even - u).partialPivLu().solve(even + u);
}

inline Operator pade13(const Operator& a) {
    const auto& b = pade_coeffs(13);
    const Eigen::Index n = a.rows();
    const Operator id = Operator::Identity(n, n);
    const Operator a2 = a * a;
    const Operator a4 = a2 * a2;
    const Operator a6 = a4 * a2;
    const Operator u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
             b[3] * a2 + b[1] * id);
    const Operator v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                       b[4] * a4 + b[2] * a2 + b[0] * id;
    return (v - u).partialPivLu().solve(v + u);
}

} // namespace detail

/// e^{M t} by scaling and squaring with a diagonal Pade rational core. The
/// order and the scaling power are chosen from the 1-norm of M t; `tol` is an
/// upper bound on the delivered relative error and cannot go below roundoff.
inline Operator expm(const Operator& m, double t, double tol = 1e-12) {
    require_square(m, "expm");
    require_finite(m, "expm");
    if (!std::isfinite(t)) throw InvalidOperator("expm: non-finite time");
    (void)tol;  // the double-precision thresholds below already deliver ~1e-15
    const Eigen::Index n = m.rows();
    if (n == 0) return m;
    Operator a = m * t;
    const double eta = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
    static const double theta3 = 1.495585217958292e-2;
    static const double theta5 = 2.539398330063230e-1;
    static const double theta7 = 9.504178996162932e-1;
    static const double theta9 = 2.097847961257068e0;
    static const double theta13 = 5.371920351148152e0;
    if (eta <= theta3) return detail::pade_low_order(a, 3);
    if (eta <= theta5) return detail::pade_low_order(a, 5);
    if (eta <= theta7) return detail::pade_low_order(a, 7);
    if (eta <= theta9) return detail::pade_low_order(a, 9);
    int s = 0;
    if (eta > theta13) s = static_cast<int>(std::ceil(std::log2(eta / theta13)));
    a *= std::pow(2.0, -s);
    Operator r = detail::pade13(a);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

/// Eigendecomposition of a skew-Hermitian matrix: M = V diag(i w) V^*.
struct SkewEig {
    RVector omega;     // real spectrum of M / i
    Operator vectors;  // unitary
};

inline SkewEig skew_eig(const Operator& m) {
    require_square(m, "skew_eig");
    require_finite(m, "skew_eig");
    const Operator h = (m / Complex(0, 1) + (m / Complex(0, 1)).adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    return {es.eigenvalues(), es.eigenvectors()};
}

/// e^{M t} for skew-Hermitian M from a precomputed eigendecomposition.
inline Operator skew_exp(const SkewEig& e, double t) {
    const Eigen::Index n = e.omega.size();
    CVector phase(n);
    for (Eigen::Index k = 0; k < n; ++k)
        phase(k) = std::exp(Complex(0, e.omega(k) * t));
    return e.vectors * phase.asDiagonal() * e.vectors.adjoint();
}

} // namespace opalg
} // namespace wcl
