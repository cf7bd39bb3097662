#pragma once

// Discretized shift-periodic half-strip: grid geometry, boundary data,
// ghost-value rules and elementary difference stencils.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcn {

// Rectangular grid on [0, l) x [0, L] with l = pi/eps, x_i = i*eta (i = 0..m-1),
// y_j = j*zeta (j = 0..n). The x-period is exact by construction: eta = pi/(eps*m).
struct StripGrid {
    double eps;   // wavenumber parameter, in (0, 1]
    double L;     // strip height
    int m;        // node count in x
    int n;        // cell count in y (n+1 node rows)
    double eta;   // x spacing, l/m
    double zeta;  // y spacing, L/n

    double ell() const { return std::numbers::pi / eps; }
    double beta() const { return std::sqrt(1.0 - eps * eps); }
    double x(int i) const { return i * eta; }
    double y(int j) const { return j * zeta; }
    std::size_t nodes() const { return std::size_t(m) * std::size_t(n + 1); }
};

inline StripGrid build_grid(double eps, double L, int m, int n) {
    if (!(eps > 0.0) || eps > 1.0)
        throw std::invalid_argument("build_grid: eps must lie in (0, 1]");
    if (!(L > 0.0)) throw std::invalid_argument("build_grid: L must be positive");
    if (m < 8 || n < 8) throw std::invalid_argument("build_grid: need m >= 8 and n >= 8");
    StripGrid g;
    g.eps = eps;
    g.L = L;
    g.m = m;
    g.n = n;
    g.eta = std::numbers::pi / (eps * m);
    g.zeta = L / n;
    return g;
}

// Dirichlet node count k (a = k/m) and the asymptotic phase shift delta.
struct BoundaryConfig {
    int k = 0;
    double delta = 0.0;
};

// Nodal phase values theta_{i,j} bound to a grid and boundary data.
class PhaseField {
  public:
    PhaseField(const StripGrid& grid, const BoundaryConfig& cfg)
        : grid_(grid), cfg_(cfg), v_(grid.nodes(), 0.0) {
        if (cfg.k < 0 || cfg.k > grid.m)
            throw std::invalid_argument("PhaseField: k must lie in [0, m]");
    }

    const StripGrid& grid() const { return grid_; }
    const BoundaryConfig& config() const { return cfg_; }
    double a() const { return double(cfg_.k) / grid_.m; }

    double operator()(int i, int j) const { return v_[idx(i, j)]; }
    double& at(int i, int j) { return v_[idx(i, j)]; }

    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    void set_delta(double d) { cfg_.delta = d; }

    // Value pinned on the top Dirichlet row j = n; extends to the ghost row j = n+1.
    double top_value(int i, int j) const {
        return std::numbers::pi * i / grid_.m + grid_.beta() * grid_.zeta * j + cfg_.delta +
               grid_.beta() * (grid_.L - grid_.zeta * grid_.n);
    }

    // Enforce the discrete boundary conditions in place: theta_{i,0} = 0 for i < k,
    // theta_{i,1} = theta_{i,0} for i >= k, and the exact top row.
    void project_constraints() {
        const int m = grid_.m, n = grid_.n;
        for (int i = 0; i < cfg_.k; ++i) at(i, 0) = 0.0;
        for (int i = cfg_.k; i < m; ++i) at(i, 1) = (*this)(i, 0);
        for (int i = 0; i < m; ++i) at(i, n) = top_value(i, n);
    }

    bool satisfies_constraints(double tol = 0.0) const {
        const int m = grid_.m, n = grid_.n;
        for (int i = 0; i < cfg_.k; ++i)
            if (std::abs((*this)(i, 0)) > tol) return false;
        for (int i = cfg_.k; i < m; ++i)
            if (std::abs((*this)(i, 1) - (*this)(i, 0)) > tol) return false;
        for (int i = 0; i < m; ++i)
            if (std::abs((*this)(i, n) - top_value(i, n)) > tol) return false;
        return true;
    }

    bool all_finite() const {
        for (double t : v_)
            if (!std::isfinite(t)) return false;
        return true;
    }

  private:
    std::size_t idx(int i, int j) const {
        return std::size_t(j) * std::size_t(grid_.m) + std::size_t(i);
    }

    StripGrid grid_;
    BoundaryConfig cfg_;
    std::vector<double> v_;
};

// Value of theta at extended indices i in [-1, m], j in [-1, n+1].
// i = -1 and i = m use shift-periodicity (theta(x + l) = theta(x) + pi);
// j = n+1 is the Dirichlet far-field row. The j = -1 row continues the
// pattern across y = 0 by point reflection through the boundary value,
// theta_{i,-1} = 2 theta_{i,0} - theta_{i,1}: on the Neumann columns the
// tie theta_{i,1} = theta_{i,0} makes this the even reflection, and on the
// Dirichlet columns it is the odd continuation of the two-valued phase.
inline double ghost_value(const PhaseField& f, int i, int j) {
    const StripGrid& g = f.grid();
    if (i < -1 || i > g.m || j < -1 || j > g.n + 1)
        throw std::out_of_range("ghost_value: index outside the extended range");
    if (j == g.n + 1) return f.top_value(i, j);  // formula extends to i = -1, m
    double shift = 0.0;
    if (i == -1) {
        i = g.m - 1;
        shift = -std::numbers::pi;
    } else if (i == g.m) {
        i = 0;
        shift = std::numbers::pi;
    }
    if (j == -1) return 2.0 * f(i, 0) - f(i, 1) + shift;
    return f(i, std::clamp(j, 0, g.n)) + shift;
}

// Five-point discrete Laplacian (dx+ dx- + dy+ dy-) theta at node (i, j),
// with ghost rules supplying out-of-range neighbors.
inline double laplacian_stencil(const PhaseField& f, int i, int j) {
    const StripGrid& g = f.grid();
    if (i < 0 || i >= g.m || j < 0 || j > g.n)
        throw std::out_of_range("laplacian_stencil: node outside the grid");
    const double c = f(i, j);
    const double xp = ghost_value(f, i + 1, j);
    const double xm = ghost_value(f, i - 1, j);
    const double yp = ghost_value(f, i, j + 1);
    const double ym = ghost_value(f, i, j - 1);
    return (xp - 2.0 * c + xm) / (g.eta * g.eta) + (yp - 2.0 * c + ym) / (g.zeta * g.zeta);
}

} // namespace rcn
