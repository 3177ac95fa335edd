#pragma once

// One-parameter groups of the model and the exact projected evolution:
//   U_t       free group, generated by Z (diagonal, evaluated entrywise)
//   U^l_t     dressed group, generated by Z + l (A00 + A11)
//   V^l_t     full group, generated by Z + l A
//   X^l_t     reduced free evolution P0 U^l_t on range(P0)
//   W^l_t     exact projected evolution P0 V^l_t P0
// The dressed generator is block diagonal, so its two blocks are decomposed
// separately and U^l_t commutes with P0 exactly. All propagators at arbitrary
// t come from eigendecompositions cached at construction.

#include "wcl/errors.hpp"
#include "wcl/model.hpp"
#include "wcl/opalg.hpp"

namespace wcl {

class Propagators {
public:
    explicit Propagators(SystemModel m) : m_(std::move(m)) {
        const int n0 = m_.n0;
        const int n1 = m_.n1;
        Operator g00 = Operator::Zero(n0, n0);
        for (int k = 0; k < n0; ++k) g00(k, k) = Complex(0, m_.omega(k));
        g00 += m_.lambda * m_.A.topLeftCorner(n0, n0);
        Operator g11 = Operator::Zero(n1, n1);
        for (int k = 0; k < n1; ++k) g11(k, k) = Complex(0, m_.omega(n0 + k));
        g11 += m_.lambda * m_.A.bottomRightCorner(n1, n1);
        dressed00_ = opalg::skew_eig(g00);
        dressed11_ = opalg::skew_eig(g11);
        full_ = opalg::skew_eig(m_.Z() + m_.lambda * m_.A);
    }

    const SystemModel& model() const { return m_; }

    Operator free_group(double t) const {
        const int n = m_.dim();
        Operator u = Operator::Zero(n, n);
        for (int k = 0; k < n; ++k) u(k, k) = std::exp(Complex(0, m_.omega(k) * t));
        return u;
    }

    Operator dressed_group(double t) const {
        const int n = m_.dim();
        Operator u = Operator::Zero(n, n);
        u.topLeftCorner(m_.n0, m_.n0) = opalg::skew_exp(dressed00_, t);
        u.bottomRightCorner(m_.n1, m_.n1) = opalg::skew_exp(dressed11_, t);
        return u;
    }

    Operator full_group(double t) const { return opalg::skew_exp(full_, t); }

    // P0 U^l_t, supported on the leading n0 x n0 block
    Operator reduced_free(double t) const {
        return embed0(opalg::skew_exp(dressed00_, t), m_.dim());
    }

    // W^l_t = P0 V^l_t P0
    Operator exact_projected(double t) const {
        return embed0(Operator(full_group(t).topLeftCorner(m_.n0, m_.n0)), m_.dim());
    }

    // f_l(tau) = X^l_{-t} W^l_t b with t = tau / lambda^2
    CVector interaction_picture(double tau, const CVector& b) const {
        if (m_.lambda == 0.0)
            throw CouplingZero("interaction_picture: lambda = 0 has no rescaled time");
        const double t = tau / (m_.lambda * m_.lambda);
        CVector w = full_group(t) * project0(b);
        w = project0(w);
        CVector out = CVector::Zero(m_.dim());
        out.head(m_.n0) = opalg::skew_exp(dressed00_, -t) * w.head(m_.n0);
        return out;
    }

    // U_{-t} M U_t for the free (diagonal) group
    Operator free_conj(const Operator& mat, double t) const {
        Operator out = mat;
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c)
                out(r, c) *= std::exp(Complex(0, (m_.omega(c) - m_.omega(r)) * t));
        return out;
    }

private:
    CVector project0(const CVector& v) const {
        CVector out = CVector::Zero(v.size());
        out.head(m_.n0) = v.head(m_.n0);
        return out;
    }

    SystemModel m_;
    opalg::SkewEig dressed00_;
    opalg::SkewEig dressed11_;
    opalg::SkewEig full_;
};

} // namespace wcl
