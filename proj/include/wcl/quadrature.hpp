#pragma once

// Panel quadrature for operator-valued integrands: 1-D composite rules,
// ordered 2-D (triangular) rules, and affine triangle domains. Accumulation
// order is fixed left-to-right so identical inputs give bitwise-identical
// sums; an opt-in pairwise reduction covers the parallel case.
//
// The ordered 2-D rule uses one panelization for both axes. Panel pairs
// strictly below the diagonal get the full tensor weights; a diagonal panel
// (the square the line t2 = t1 cuts through) gets the exact lower-triangle
// integrals of its Lagrange basis products, with V_ij + V_ji = w_i w_j
// enforced identically. That keeps the partition identity
//   ordered(f) + ordered(f o swap) = box(f)
// true to rounding while preserving the panel rule's order of accuracy.

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <utility>
#include <vector>

#include "wcl/domain.hpp"
#include "wcl/errors.hpp"
#include "wcl/model.hpp"
#include "wcl/opalg.hpp"
#include "wcl/threads.hpp"

namespace wcl::quadrature {

namespace detail {

struct NodeRule {
    std::vector<double> x;  // nodes on [0, 1]
    std::vector<double> w;  // weights summing to 1
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_p.
inline void gauss_legendre(int p, std::vector<double>& x, std::vector<double>& w) {
    x.assign(p, 0.0);
    w.assign(p, 0.0);
    for (int i = 0; i < p; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (p + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= p; ++k) {
                const double pk = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = p * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[p - 1 - i] = t;
        w[p - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

inline std::mutex& rule_cache_mutex() {
    static std::mutex m;
    return m;
}

inline const NodeRule& unit_rule(QuadScheme scheme, int p) {
    static std::map<std::pair<int, int>, NodeRule> cache;
    const auto key = std::make_pair(static_cast<int>(scheme), p);
    std::lock_guard<std::mutex> lock(rule_cache_mutex());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    NodeRule r;
    if (scheme == QuadScheme::GaussLegendrePanels) {
        std::vector<double> x, w;
        gauss_legendre(p, x, w);
        r.x.resize(p);
        r.w.resize(p);
        for (int i = 0; i < p; ++i) {
            r.x[i] = 0.5 * (x[i] + 1.0);
            r.w[i] = 0.5 * w[i];
        }
    } else {
        // composite Simpson inside the panel; p odd
        const int n = p - 1;
        const double h = 1.0 / n;
        r.x.resize(p);
        r.w.resize(p);
        for (int i = 0; i <= n; ++i) {
            r.x[i] = i * h;
            double c = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            r.w[i] = c * h / 3.0;
        }
    }
    return cache.emplace(key, std::move(r)).first->second;
}

// Lagrange basis value l_i(t) for the rule's node set on [0, 1].
inline double lagrange(const std::vector<double>& nodes, int i, double t) {
    double v = 1.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (static_cast<int>(k) == static_cast<int>(i)) continue;
        v *= (t - nodes[k]) / (nodes[i] - nodes[k]);
    }
    return v;
}

// V_ij = integral over {0 <= t2 <= t1 <= 1} of l_i(t1) l_j(t2), with the
// complement pairs filled as w_i w_j - V_ij and V_ii = w_i^2 / 2.
inline const std::vector<double>& lower_triangle_matrix(QuadScheme scheme, int p) {
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    const auto key = std::make_pair(static_cast<int>(scheme), p);
    const NodeRule& rule = unit_rule(scheme, p);  // before taking the lock
    std::lock_guard<std::mutex> lock(rule_cache_mutex());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<double> gx, gw;
    gauss_legendre(48, gx, gw);
    std::vector<double> v(p * p, 0.0);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < i; ++j) {
            double acc = 0.0;
            for (std::size_t a = 0; a < gx.size(); ++a) {
                const double t1 = 0.5 * (gx[a] + 1.0);
                const double w1 = 0.5 * gw[a];
                double inner = 0.0;
                for (std::size_t b = 0; b < gx.size(); ++b) {
                    const double t2 = 0.5 * t1 * (gx[b] + 1.0);
                    inner += 0.5 * t1 * gw[b] * lagrange(rule.x, j, t2);
                }
                acc += w1 * lagrange(rule.x, i, t1) * inner;
            }
            v[i * p + j] = acc;
            v[j * p + i] = rule.w[i] * rule.w[j] - acc;
        }
        v[i * p + i] = 0.5 * rule.w[i] * rule.w[i];
    }
    return cache.emplace(key, std::move(v)).first->second;
}

} // namespace detail

struct Panelization {
    std::vector<std::pair<double, double>> intervals;  // ordered, non-overlapping
    int nodes_per_panel = 16;
    QuadScheme scheme = QuadScheme::GaussLegendrePanels;

    void validate() const {
        if (scheme == QuadScheme::CompositeSimpson && nodes_per_panel % 2 == 0)
            throw ConstructionError("Panelization: Simpson needs an odd node count");
        if (nodes_per_panel < 2)
            throw ConstructionError("Panelization: need at least 2 nodes per panel");
        for (std::size_t k = 0; k + 1 < intervals.size(); ++k)
            if (intervals[k].second > intervals[k + 1].first + 1e-14)
                throw ConstructionError("Panelization: panels overlap or are unordered");
    }

    // uniform panels covering [lo, hi] with about `density` nodes per unit
    static Panelization uniform(double lo, double hi, double density,
                                QuadScheme scheme) {
        Panelization p;
        p.scheme = scheme;
        p.nodes_per_panel = (scheme == QuadScheme::GaussLegendrePanels) ? 16 : 9;
        const double len = hi - lo;
        if (len <= 0.0) return p;
        const int total = std::max(p.nodes_per_panel,
                                   static_cast<int>(std::ceil(density * len)));
        const int panels = std::max(1, (total + p.nodes_per_panel - 1) / p.nodes_per_panel);
        const double width = len / panels;
        p.intervals.reserve(panels);
        for (int k = 0; k < panels; ++k)
            p.intervals.emplace_back(lo + k * width, (k + 1 == panels) ? hi : lo + (k + 1) * width);
        p.validate();
        return p;
    }

    std::size_t node_count() const {
        return intervals.size() * static_cast<std::size_t>(nodes_per_panel);
    }

    template <class Fn>  // fn(panel_index, node_x, node_weight)
    void for_each_node(Fn&& fn) const {
        const detail::NodeRule& rule = detail::unit_rule(scheme, nodes_per_panel);
        for (std::size_t k = 0; k < intervals.size(); ++k) {
            const double a = intervals[k].first;
            const double h = intervals[k].second - intervals[k].first;
            for (int i = 0; i < nodes_per_panel; ++i)
                fn(k, a + h * rule.x[i], h * rule.w[i]);
        }
    }
};

namespace detail {

template <class T>
inline void check_finite(const T& v, double x) {
    bool ok;
    if constexpr (std::is_floating_point_v<T>) {
        ok = std::isfinite(v);
    } else {
        ok = v.allFinite();
    }
    if (!ok) {
        std::ostringstream os;
        os << "integrand is non-finite at node x = " << x;
        throw IntegrandBlowup(os.str());
    }
}

} // namespace detail

enum class Accumulate { Sequential, PairwiseParallel };

/// Quadrature sum of f over the panelization, fixed left-to-right order.
template <class F>
auto integrate_1d(F&& f, const Panelization& p,
                  Accumulate mode = Accumulate::Sequential) -> decltype(f(0.0)) {
    p.validate();
    using R = decltype(f(0.0));
    if (p.intervals.empty())
        throw ConstructionError("integrate_1d: empty panelization");
    if (mode == Accumulate::Sequential) {
        bool first = true;
        R acc{};
        p.for_each_node([&](std::size_t, double x, double w) {
            R v = f(x);
            detail::check_finite(v, x);
            if (first) {
                acc = R(w * v);
                first = false;
            } else {
                acc += w * v;
            }
        });
        return acc;
    }
    // panel-indexed partial sums, then a deterministic pairwise tree
    const detail::NodeRule& rule = detail::unit_rule(p.scheme, p.nodes_per_panel);
    std::vector<R> partial(p.intervals.size());
    parallel_for(static_cast<int>(p.intervals.size()), [&](int k) {
        const double a = p.intervals[k].first;
        const double h = p.intervals[k].second - a;
        R acc{};
        for (int i = 0; i < p.nodes_per_panel; ++i) {
            const double x = a + h * rule.x[i];
            R v = f(x);
            detail::check_finite(v, x);
            if (i == 0)
                acc = R((h * rule.w[i]) * v);
            else
                acc += (h * rule.w[i]) * v;
        }
        partial[k] = std::move(acc);
    });
    std::size_t n = partial.size();
    while (n > 1) {
        const std::size_t half = (n + 1) / 2;
        for (std::size_t k = 0; k + half < n; ++k) partial[k] += partial[k + half];
        n = half;
    }
    return partial[0];
}

/// Integral of f(t1, t2) over {lo <= t2 <= t1 <= hi}.
template <class F>
auto integrate_ordered_2d(F&& f, double lo, double hi, double density,
                          QuadScheme scheme) -> decltype(f(0.0, 0.0)) {
    using R = decltype(f(0.0, 0.0));
    const Panelization p = Panelization::uniform(lo, hi, density, scheme);
    if (p.intervals.empty()) throw ConstructionError("integrate_ordered_2d: empty box");
    const detail::NodeRule& rule = detail::unit_rule(p.scheme, p.nodes_per_panel);
    const std::vector<double>& vmat =
        detail::lower_triangle_matrix(p.scheme, p.nodes_per_panel);
    const int np = p.nodes_per_panel;
    const std::size_t panels = p.intervals.size();
    auto eval = [&](double t1, double t2) {
        R v = f(t1, t2);
        detail::check_finite(v, t1);
        return v;
    };
    bool first = true;
    R acc{};
    auto add = [&](double w, R&& v) {
        if (first) {
            acc = R(w * v);
            first = false;
        } else {
            acc += w * v;
        }
    };
    for (std::size_t a = 0; a < panels; ++a) {
        const double a_lo = p.intervals[a].first;
        const double ha = p.intervals[a].second - a_lo;
        // strictly lower panels: full tensor weights
        for (std::size_t b = 0; b < a; ++b) {
            const double b_lo = p.intervals[b].first;
            const double hb = p.intervals[b].second - b_lo;
            for (int i = 0; i < np; ++i)
                for (int j = 0; j < np; ++j)
                    add(ha * rule.w[i] * hb * rule.w[j],
                        eval(a_lo + ha * rule.x[i], b_lo + hb * rule.x[j]));
        }
        // diagonal panel: exact lower-triangle basis weights
        for (int i = 0; i < np; ++i)
            for (int j = 0; j < np; ++j)
                add(ha * ha * vmat[i * np + j],
                    eval(a_lo + ha * rule.x[i], a_lo + ha * rule.x[j]));
    }
    return acc;
}

/// Integral of g(t1) h(t2) over {t2 <= t1} within [lo, hi], same node scheme
/// as integrate_ordered_2d but with one product per node instead of per pair.
template <class G, class H>
Operator integrate_ordered_separable(G&& g, H&& h, double lo, double hi,
                                     double density, QuadScheme scheme) {
    const Panelization p = Panelization::uniform(lo, hi, density, scheme);
    if (p.intervals.empty())
        throw ConstructionError("integrate_ordered_separable: empty box");
    const detail::NodeRule& rule = detail::unit_rule(p.scheme, p.nodes_per_panel);
    const std::vector<double>& vmat =
        detail::lower_triangle_matrix(p.scheme, p.nodes_per_panel);
    const int np = p.nodes_per_panel;
    Operator acc, prefix;
    bool first = true;
    for (std::size_t a = 0; a < p.intervals.size(); ++a) {
        const double a_lo = p.intervals[a].first;
        const double ha = p.intervals[a].second - a_lo;
        std::vector<Operator> gs(np), hs(np);
        for (int i = 0; i < np; ++i) {
            const double x = a_lo + ha * rule.x[i];
            gs[i] = g(x);
            hs[i] = h(x);
            detail::check_finite(gs[i], x);
            detail::check_finite(hs[i], x);
        }
        if (first) {
            acc = Operator::Zero(gs[0].rows(), hs[0].cols());
            prefix = Operator::Zero(hs[0].rows(), hs[0].cols());
            first = false;
        }
        Operator g_panel = ha * rule.w[0] * gs[0];
        Operator h_panel = ha * rule.w[0] * hs[0];
        for (int i = 1; i < np; ++i) {
            g_panel += ha * rule.w[i] * gs[i];
            h_panel += ha * rule.w[i] * hs[i];
        }
        acc += g_panel * prefix;  // strictly lower panels
        for (int i = 0; i < np; ++i) {
            Operator hsum = vmat[i * np + 0] * hs[0];
            for (int j = 1; j < np; ++j) hsum += vmat[i * np + j] * hs[j];
            acc += (ha * ha) * (gs[i] * hsum);
        }
        prefix += h_panel;
    }
    return acc;
}

/// Integral of [g(t1), g(t2)] over {t2 <= t1} within [lo, hi].
template <class G>
Operator integrate_ordered_commutator(G&& g, double lo, double hi, double density,
                                      QuadScheme scheme) {
    const Panelization p = Panelization::uniform(lo, hi, density, scheme);
    if (p.intervals.empty())
        throw ConstructionError("integrate_ordered_commutator: empty box");
    const detail::NodeRule& rule = detail::unit_rule(p.scheme, p.nodes_per_panel);
    const std::vector<double>& vmat =
        detail::lower_triangle_matrix(p.scheme, p.nodes_per_panel);
    const int np = p.nodes_per_panel;
    Operator acc, prefix;
    bool first = true;
    for (std::size_t a = 0; a < p.intervals.size(); ++a) {
        const double a_lo = p.intervals[a].first;
        const double ha = p.intervals[a].second - a_lo;
        std::vector<Operator> gs(np);
        for (int i = 0; i < np; ++i) {
            const double x = a_lo + ha * rule.x[i];
            gs[i] = g(x);
            detail::check_finite(gs[i], x);
        }
        if (first) {
            acc = Operator::Zero(gs[0].rows(), gs[0].cols());
            prefix = acc;
            first = false;
        }
        Operator g_panel = ha * rule.w[0] * gs[0];
        for (int i = 1; i < np; ++i) g_panel += ha * rule.w[i] * gs[i];
        acc += g_panel * prefix - prefix * g_panel;
        for (int i = 0; i < np; ++i) {
            Operator gsum = vmat[i * np + 0] * gs[0];
            for (int j = 1; j < np; ++j) gsum += vmat[i * np + j] * gs[j];
            acc += (ha * ha) * (gs[i] * gsum - gsum * gs[i]);
        }
        prefix += g_panel;
    }
    return acc;
}

/// Integral over a triangle with the given vertices: affine/Duffy map onto
/// [0,1]^2 and tensorized panels, na x nb nodes.
template <class F>
auto integrate_triangle_vertices(F&& f, const std::array<double, 2>& v1,
                                 const std::array<double, 2>& v2,
                                 const std::array<double, 2>& v3, int na, int nb,
                                 QuadScheme scheme) -> decltype(f(0.0, 0.0)) {
    using R = decltype(f(0.0, 0.0));
    const double two_area = std::abs((v2[0] - v1[0]) * (v3[1] - v1[1]) -
                                     (v3[0] - v1[0]) * (v2[1] - v1[1]));
    if (two_area == 0.0) {
        R probe = f(v1[0], v1[1]);
        return R(0.0 * probe);
    }
    const Panelization pa = Panelization::uniform(0.0, 1.0, std::max(na, 8), scheme);
    const Panelization pb = Panelization::uniform(0.0, 1.0, std::max(nb, 8), scheme);
    bool first = true;
    R acc{};
    pa.for_each_node([&](std::size_t, double a, double wa) {
        pb.for_each_node([&](std::size_t, double b, double wb) {
            const double sx = (1.0 - a) * v1[0] + a * ((1.0 - b) * v2[0] + b * v3[0]);
            const double sy = (1.0 - a) * v1[1] + a * ((1.0 - b) * v2[1] + b * v3[1]);
            R v = f(sx, sy);
            detail::check_finite(v, sx);
            const double w = wa * wb * two_area * a;
            if (first) {
                acc = R(w * v);
                first = false;
            } else {
                acc += w * v;
            }
        });
    });
    return acc;
}

/// Spec-shaped entry point: integrate over a TriangleDomain with per-axis
/// node counts derived from the domain extents and `density` nodes per unit.
template <class F>
auto integrate_triangle(F&& f, const TriangleDomain& d, int density)
    -> decltype(f(0.0, 0.0)) {
    const auto v = d.vertices();
    double lo_s = v[0][0], hi_s = v[0][0], lo_x = v[0][1], hi_x = v[0][1];
    for (const auto& p : v) {
        lo_s = std::min(lo_s, p[0]);
        hi_s = std::max(hi_s, p[0]);
        lo_x = std::min(lo_x, p[1]);
        hi_x = std::max(hi_x, p[1]);
    }
    const int na = static_cast<int>(std::ceil(density * (hi_s - lo_s)));
    const int nb = static_cast<int>(std::ceil(density * (hi_x - lo_x)));
    return integrate_triangle_vertices(std::forward<F>(f), v[0], v[1], v[2], na, nb,
                                       QuadScheme::GaussLegendrePanels);
}

} // namespace wcl::quadrature
