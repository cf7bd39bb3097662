#pragma once

// Discrete energy of the variational problem on the strip: bending term
// (5-point Laplacian squared) plus strain term built from the four one-sided
// squared differences, summed with weight eta*zeta over every node row.
// The gradient is the exact derivative of that sum, including chain-rule
// contributions through ghost values and the eliminated boundary unknowns.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rcn/grid.hpp"

namespace rcn {

struct EnergyBreakdown {
    double bending = 0.0;
    double strain = 0.0;
    double total = 0.0;
};

struct EnergyGradient {
    std::vector<double> nodal;  // m x (n+1), constrained slots zeroed
    double ddelta = 0.0;
    int m = 0, n = 0;

    double& at(int i, int j) { return nodal[std::size_t(j) * m + i]; }
    double operator()(int i, int j) const { return nodal[std::size_t(j) * m + i]; }

    double max_norm() const {
        double r = std::abs(ddelta);
        for (double v : nodal) r = std::max(r, std::abs(v));
        return r;
    }
};

namespace detail {

struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// theta on the extended index range i in [-1, m], j in [-1, n+1], stored
// padded so stencil loops need no branches.
struct Extended {
    int m = 0, n = 0;
    std::vector<double> v;

    void resize(const StripGrid& g) {
        m = g.m;
        n = g.n;
        v.assign(std::size_t(m + 2) * std::size_t(n + 3), 0.0);
    }
    std::size_t idx(int i, int j) const {
        return std::size_t(j + 1) * std::size_t(m + 2) + std::size_t(i + 1);
    }
    double& at(int i, int j) { return v[idx(i, j)]; }
    double get(int i, int j) const { return v[idx(i, j)]; }

    void fill(const PhaseField& f) {
        const StripGrid& g = f.grid();
        resize(g);
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i < m; ++i) at(i, j) = f(i, j);
        for (int i = -1; i <= m; ++i) at(i, n + 1) = f.top_value(i, n + 1);
        for (int i = 0; i < m; ++i) at(i, -1) = 2.0 * f(i, 0) - f(i, 1);
        constexpr double pi = std::numbers::pi;
        for (int j = -1; j <= n; ++j) {
            at(-1, j) = at(m - 1, j) - pi;
            at(m, j) = at(0, j) + pi;
        }
    }
};

} // namespace detail

// Energy sums for arbitrary extended-index values; `value(i, j)` must be
// defined for i in [-1, m], j in [-1, n+1]. Evaluation hook for free
// (non-BC) test configurations; energy(field) supplies the ghost rules.
template <class Acc>
EnergyBreakdown energy_from_accessor(const StripGrid& g, Acc&& value) {
    const double ieta = 1.0 / g.eta, izeta = 1.0 / g.zeta;
    detail::Kahan bend, strain;
    for (int j = 0; j <= g.n; ++j) {
        for (int i = 0; i < g.m; ++i) {
            const double c = value(i, j);
            const double xp = value(i + 1, j), xm = value(i - 1, j);
            const double yp = value(i, j + 1), ym = value(i, j - 1);
            const double lap =
                (xp - 2.0 * c + xm) * ieta * ieta + (yp - 2.0 * c + ym) * izeta * izeta;
            const double dxp = (xp - c) * ieta, dxm = (c - xm) * ieta;
            const double dyp = (yp - c) * izeta, dym = (c - ym) * izeta;
            const double s = 0.5 * (dxp * dxp + dxm * dxm + dyp * dyp + dym * dym);
            bend.add(lap * lap);
            strain.add((s - 1.0) * (s - 1.0));
        }
    }
    EnergyBreakdown e;
    e.bending = g.eta * g.zeta * bend.sum;
    e.strain = g.eta * g.zeta * strain.sum;
    e.total = e.bending + e.strain;
    return e;
}

inline EnergyBreakdown energy(const PhaseField& f) {
    if (!f.all_finite()) throw std::invalid_argument("energy: non-finite nodal values");
    detail::Extended ext;
    ext.fill(f);
    return energy_from_accessor(f.grid(), [&](int i, int j) { return ext.get(i, j); });
}

namespace detail {

// Fused energy + gradient pass over a prefilled extension. Scatters raw
// per-node derivatives into gext; fold_gradient applies the constraint
// structure afterwards.
inline EnergyBreakdown energy_gradient_raw(const StripGrid& g, const Extended& ext,
                                           Extended& gext) {
    gext.resize(g);
    const double ieta = 1.0 / g.eta, izeta = 1.0 / g.zeta;
    const double w = g.eta * g.zeta;
    Kahan bend, strain;
    for (int j = 0; j <= g.n; ++j) {
        for (int i = 0; i < g.m; ++i) {
            const double c = ext.get(i, j);
            const double xp = ext.get(i + 1, j), xm = ext.get(i - 1, j);
            const double yp = ext.get(i, j + 1), ym = ext.get(i, j - 1);
            const double lap =
                (xp - 2.0 * c + xm) * ieta * ieta + (yp - 2.0 * c + ym) * izeta * izeta;
            const double dxp = (xp - c) * ieta, dxm = (c - xm) * ieta;
            const double dyp = (yp - c) * izeta, dym = (c - ym) * izeta;
            const double s = 0.5 * (dxp * dxp + dxm * dxm + dyp * dyp + dym * dym);
            bend.add(lap * lap);
            strain.add((s - 1.0) * (s - 1.0));

            const double wb = 2.0 * w * lap;
            const double ws = 2.0 * w * (s - 1.0);
            gext.at(i, j) += wb * (-2.0 * ieta * ieta - 2.0 * izeta * izeta) +
                             ws * ((dxm - dxp) * ieta + (dym - dyp) * izeta);
            gext.at(i + 1, j) += wb * ieta * ieta + ws * dxp * ieta;
            gext.at(i - 1, j) += wb * ieta * ieta - ws * dxm * ieta;
            gext.at(i, j + 1) += wb * izeta * izeta + ws * dyp * izeta;
            gext.at(i, j - 1) += wb * izeta * izeta - ws * dym * izeta;
        }
    }
    EnergyBreakdown e;
    e.bending = w * bend.sum;
    e.strain = w * strain.sum;
    e.total = e.bending + e.strain;
    return e;
}

inline void fold_gradient(const PhaseField& f, Extended& gext, EnergyGradient& out) {
    const StripGrid& g = f.grid();
    const int m = g.m, n = g.n, k = f.config().k;
    out.m = m;
    out.n = n;
    out.nodal.assign(std::size_t(m) * (n + 1), 0.0);

    // shift-periodic images
    for (int j = -1; j <= n + 1; ++j) {
        gext.at(m - 1, j) += gext.at(-1, j);
        gext.at(0, j) += gext.at(m, j);
    }
    // j = -1 point reflection: theta_{i,-1} = 2 theta_{i,0} - theta_{i,1}
    for (int i = 0; i < m; ++i) {
        gext.at(i, 0) += 2.0 * gext.at(i, -1);
        gext.at(i, 1) -= gext.at(i, -1);
    }

    for (int j = 0; j <= n; ++j)
        for (int i = 0; i < m; ++i) out.at(i, j) = gext.at(i, j);

    // delta reaches the energy through the pinned row j = n and the ghost row j = n+1
    Kahan dd;
    for (int i = 0; i < m; ++i) dd.add(gext.at(i, n + 1));
    for (int i = 0; i < m; ++i) {
        dd.add(out.at(i, n));
        out.at(i, n) = 0.0;
    }
    out.ddelta = dd.sum;

    // eliminated unknowns: theta_{i,1} tied to theta_{i,0} on the Neumann part,
    // Dirichlet nodes fixed
    for (int i = k; i < m; ++i) {
        out.at(i, 0) += out.at(i, 1);
        out.at(i, 1) = 0.0;
    }
    for (int i = 0; i < k; ++i) out.at(i, 0) = 0.0;
}

} // namespace detail

inline EnergyBreakdown energy_and_gradient(const PhaseField& f, EnergyGradient& grad) {
    if (!f.all_finite())
        throw std::invalid_argument("energy_and_gradient: non-finite nodal values");
    detail::Extended ext, gext;
    ext.fill(f);
    EnergyBreakdown e = detail::energy_gradient_raw(f.grid(), ext, gext);
    detail::fold_gradient(f, gext, grad);
    return e;
}

inline EnergyGradient gradient(const PhaseField& f) {
    EnergyGradient grad;
    energy_and_gradient(f, grad);
    return grad;
}

// |sum (lap theta)^2 - sum |grad grad theta|^2 - 2 * contour theta_x d(theta_y)|
// with centered stencils; tends to 0 under refinement for BC-satisfying fields.
inline double boundary_identity_residual(const PhaseField& f) {
    const StripGrid& g = f.grid();
    detail::Extended ext;
    ext.fill(f);
    const double ieta = 1.0 / g.eta, izeta = 1.0 / g.zeta;
    detail::Kahan lap2, hess2;
    for (int j = 0; j <= g.n; ++j) {
        for (int i = 0; i < g.m; ++i) {
            const double c = ext.get(i, j);
            const double txx = (ext.get(i + 1, j) - 2 * c + ext.get(i - 1, j)) * ieta * ieta;
            const double tyy = (ext.get(i, j + 1) - 2 * c + ext.get(i, j - 1)) * izeta * izeta;
            const double txy = (ext.get(i + 1, j + 1) - ext.get(i + 1, j - 1) -
                                ext.get(i - 1, j + 1) + ext.get(i - 1, j - 1)) *
                               0.25 * ieta * izeta;
            const double lap = txx + tyy;
            lap2.add(lap * lap);
            hess2.add(txx * txx + 2.0 * txy * txy + tyy * tyy);
        }
    }
    // contour term along y = 0 (+x) and y = L (-x); the periodic sides cancel
    auto edge_sum = [&](int j) {
        detail::Kahan s;
        for (int i = 0; i < g.m; ++i) {
            const double tx = (ext.get(i + 1, j) - ext.get(i - 1, j)) * 0.5 * ieta;
            const double typ = (ext.get(i + 1, j + 1) - ext.get(i + 1, j - 1)) * 0.5 * izeta;
            const double tym = (ext.get(i - 1, j + 1) - ext.get(i - 1, j - 1)) * 0.5 * izeta;
            s.add(tx * (typ - tym) * 0.5 * ieta);
        }
        return s.sum * g.eta;
    };
    const double area = g.eta * g.zeta * (lap2.sum - hess2.sum);
    const double contour = 2.0 * (edge_sum(0) - edge_sum(g.n));
    return std::abs(area - contour);
}

// Same sums restricted to nodes inside [x_lo, x_hi] x [y_lo, y_hi].
inline EnergyBreakdown energy_in_box(const PhaseField& f, double x_lo, double x_hi,
                                     double y_lo, double y_hi) {
    const StripGrid& g = f.grid();
    detail::Extended ext;
    ext.fill(f);
    const double ieta = 1.0 / g.eta, izeta = 1.0 / g.zeta;
    detail::Kahan bend, strain;
    for (int j = 0; j <= g.n; ++j) {
        const double yj = g.y(j);
        if (yj < y_lo || yj > y_hi) continue;
        for (int i = 0; i < g.m; ++i) {
            const double xi = g.x(i);
            if (xi < x_lo || xi > x_hi) continue;
            const double c = ext.get(i, j);
            const double xp = ext.get(i + 1, j), xm = ext.get(i - 1, j);
            const double yp = ext.get(i, j + 1), ym = ext.get(i, j - 1);
            const double lap =
                (xp - 2.0 * c + xm) * ieta * ieta + (yp - 2.0 * c + ym) * izeta * izeta;
            const double dxp = (xp - c) * ieta, dxm = (c - xm) * ieta;
            const double dyp = (yp - c) * izeta, dym = (c - ym) * izeta;
            const double s = 0.5 * (dxp * dxp + dxm * dxm + dyp * dyp + dym * dym);
            bend.add(lap * lap);
            strain.add((s - 1.0) * (s - 1.0));
        }
    }
    EnergyBreakdown e;
    e.bending = g.eta * g.zeta * bend.sum;
    e.strain = g.eta * g.zeta * strain.sum;
    e.total = e.bending + e.strain;
    return e;
}

} // namespace rcn
