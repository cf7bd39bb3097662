#pragma once

// Analytic constructions on the shift-periodic strip: the knee solution,
// self-dual residual, Jacobi theta_3 series, the q_a boundary interpolant,
// the Fourier-space solution of the Dirichlet self-dual problem, and the
// blended test function with uniformly bounded energy.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rcn/energy.hpp"
#include "rcn/grid.hpp"
#include "rcn/quadrature.hpp"

namespace rcn {

inline double log_cosh(double z) {
    const double a = std::abs(z);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// Self-dual grain-boundary solution theta = eps*x + log cosh(sqrt(1-eps^2) y).
inline double knee(double x, double y, double eps) {
    return eps * x + log_cosh(std::sqrt(1.0 - eps * eps) * y);
}

// Closed-form strip energy of the knee solution.
inline double knee_energy(double eps) {
    const double b2 = 1.0 - eps * eps;
    return 4.0 * std::numbers::pi * b2 * std::sqrt(b2) / (3.0 * eps);
}

// Knee sampled on the grid, with delta chosen so the far-field rows are
// consistent with the sample (delta -> -log 2 for large L). Not projected.
inline PhaseField sample_knee(const StripGrid& g) {
    const double beta = g.beta();
    BoundaryConfig cfg;
    cfg.k = 0;
    cfg.delta = log_cosh(beta * g.L) - beta * g.L;
    PhaseField f(g, cfg);
    for (int j = 0; j <= g.n; ++j)
        for (int i = 0; i < g.m; ++i) f.at(i, j) = knee(g.x(i), g.y(j), g.eps);
    return f;
}

// r_{i,j} = lap theta - (1 - |grad theta|^2) with centered stencils.
inline std::vector<double> selfdual_residual(const PhaseField& f) {
    const StripGrid& g = f.grid();
    detail::Extended ext;
    ext.fill(f);
    std::vector<double> r(g.nodes());
    const double ieta = 1.0 / g.eta, izeta = 1.0 / g.zeta;
    for (int j = 0; j <= g.n; ++j) {
        for (int i = 0; i < g.m; ++i) {
            const double c = ext.get(i, j);
            const double xp = ext.get(i + 1, j), xm = ext.get(i - 1, j);
            const double yp = ext.get(i, j + 1), ym = ext.get(i, j - 1);
            const double lap =
                (xp - 2.0 * c + xm) * ieta * ieta + (yp - 2.0 * c + ym) * izeta * izeta;
            const double tx = 0.5 * (xp - xm) * ieta;
            const double ty = 0.5 * (yp - ym) * izeta;
            r[std::size_t(j) * g.m + i] = lap - (1.0 - tx * tx - ty * ty);
        }
    }
    return r;
}

// theta_3 as a cosine series: 1 + 2 sum_n exp(-(2 pi / ell)^2 n^2 t) cos(2 pi n u),
// truncated once the term envelope drops below tol.
inline double theta3(double u, double t, double ell, double tol = 1e-14) {
    if (!(t > 0.0)) throw std::invalid_argument("theta3: t must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("theta3: tol must be positive");
    const double r = std::pow(2.0 * std::numbers::pi / ell, 2) * t;
    double s = 1.0;
    for (long n = 1;; ++n) {
        const double env = 2.0 * std::exp(-r * double(n) * double(n));
        if (env < tol) break;
        s += env * std::cos(2.0 * std::numbers::pi * n * u);
    }
    return s;
}

namespace detail {

// C-infinity step built from the bump exp(1 - 1/(1-s^2)): 0 for s <= 0,
// 1 for s >= 1, strictly monotone in between.
inline double smooth_step(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    auto bump = [](double v) {
        if (std::abs(v) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - v * v));
    };
    struct Table {
        std::vector<double> cdf;
        double norm;
        Table() {
            const int n = 2048;
            cdf.resize(n + 1);
            cdf[0] = 0.0;
            double acc = 0.0;
            const double h = 1.0 / n;
            auto f = [](double u) {
                const double v = 2.0 * u - 1.0;
                return std::abs(v) >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - v * v));
            };
            for (int i = 0; i < n; ++i) {
                const double a = i * h, b = (i + 1) * h;
                acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
                cdf[i + 1] = acc;
            }
            norm = acc;
        }
    };
    static const Table tab;
    const int n = int(tab.cdf.size()) - 1;
    const double pos = s * n;
    const int cell = std::min(int(pos), n - 1);
    const double h = 1.0 / n;
    const double a = cell * h;
    const double fa = bump(2.0 * a - 1.0), fb = bump(2.0 * (a + h) - 1.0);
    const double u = pos - cell;
    // Hermite cubic on the cell; derivative of the cdf is the bump itself
    const double p0 = tab.cdf[cell], p1 = tab.cdf[cell + 1];
    const double m0 = fa * h, m1 = fb * h;
    const double u2 = u * u, u3 = u2 * u;
    const double val = (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 +
                       (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1;
    return val / tab.norm;
}

} // namespace detail

// Geometry of the boundary interpolant q_a on [l - c*pi, l]:
// 1 - a = c*eps, inset nu, overshoot gamma, partition half-width sigma.
struct QaProfile {
    double c;
    double nu;
    double gamma;
    double sigma_small;
    double eps;
};

inline QaProfile make_qa_profile(double eps, double c, double gamma = 0.5) {
    QaProfile p;
    p.eps = eps;
    p.c = c;
    p.nu = c * std::numbers::pi / 10.0;
    p.gamma = gamma;
    p.sigma_small = p.nu / 4.0;
    return p;
}

inline void validate(const QaProfile& p) {
    const double cpi = p.c * std::numbers::pi;
    if (!(p.eps > 0.0) || p.eps > 1.0) throw std::invalid_argument("QaProfile: bad eps");
    if (!(p.c > 0.0)) throw std::invalid_argument("QaProfile: c must be positive");
    if (!(p.nu > 0.0) || 2.0 * p.nu >= cpi)
        throw std::invalid_argument("QaProfile: need 0 < nu < c*pi/2");
    if (!(p.sigma_small > 0.0) || 2.0 * p.sigma_small >= p.nu)
        throw std::invalid_argument("QaProfile: need 0 < sigma < nu/2");
    if (!(p.gamma > 0.0) || p.gamma >= 1.0)
        throw std::invalid_argument("QaProfile: need gamma in (0,1)");
}

// Compressed tanh profile joining (x0, e^pi + gamma) to (x1, 1 - gamma)
// flatly at both ends.
inline double qa_tanh(const QaProfile& p, double x) {
    const double ell = std::numbers::pi / p.eps;
    const double cpi = p.c * std::numbers::pi;
    const double epi = std::exp(std::numbers::pi);
    const double mid = ell - 0.5 * cpi;
    const double den = (x - (ell - p.nu)) * (x - (ell - cpi + p.nu));
    return 0.5 * (epi + 1.0) + (0.5 * (epi - 1.0) + p.gamma) * std::tanh((x - mid) / den);
}

// q_a(x) on [l - c*pi, l]: partition blend of e^{eps x} with (e^pi + gamma),
// the tanh profile on the middle section, and the mirrored blend to e^{eps x - pi}.
inline double build_qa_value(const QaProfile& p, double x) {
    validate(p);
    const double ell = std::numbers::pi / p.eps;
    const double cpi = p.c * std::numbers::pi;
    const double left = ell - cpi, x0 = left + p.nu, x1 = ell - p.nu;
    const double sg = p.sigma_small;
    const double epi = std::exp(std::numbers::pi);
    if (x < left - 1e-12 || x > ell + 1e-12)
        throw std::invalid_argument("build_qa_value: x outside [l - c*pi, l]");
    x = std::clamp(x, left, ell);
    if (x <= x0) {
        // psi_1 = 1 on [left, left+sigma], 0 on [x0-sigma, x0]
        const double s = detail::smooth_step((x - (left + sg)) / (p.nu - 2.0 * sg));
        return (1.0 - s) * std::exp(p.eps * x) + s * (epi + p.gamma);
    }
    if (x < x1) return qa_tanh(p, x);
    // mirrored blend on [x1, l]
    const double s = detail::smooth_step((x - (x1 + sg)) / (p.nu - 2.0 * sg));
    return (1.0 - s) * (1.0 - p.gamma) + s * std::exp(p.eps * x - std::numbers::pi);
}

// Sampled form of q_a for inspection and tests.
struct QaSamples {
    std::vector<double> x, value;
};

inline QaSamples build_qa(const QaProfile& p, int samples = 512) {
    validate(p);
    const double ell = std::numbers::pi / p.eps;
    const double left = ell - p.c * std::numbers::pi;
    QaSamples out;
    out.x.resize(samples + 1);
    out.value.resize(samples + 1);
    for (int s = 0; s <= samples; ++s) {
        const double x = left + (ell - left) * s / samples;
        out.x[s] = x;
        out.value[s] = build_qa_value(p, x);
    }
    return out;
}

// Periodic Dirichlet trace of the shift-periodic problem: e^{eps x} on the
// Dirichlet part [0, a l), q_a on [a l, l]. log_value avoids exp/log
// round-trips where the exact phase is needed.
struct ZipperTrace {
    QaProfile profile;
    double a;

    double ell() const { return std::numbers::pi / profile.eps; }

    double operator()(double x) const {
        const double l = ell();
        x -= l * std::floor(x / l);
        if (x < a * l) return std::exp(profile.eps * x);
        return build_qa_value(profile, x);
    }
    double log_value(double x) const {
        const double l = ell();
        double xr = x - l * std::floor(x / l);
        if (xr < a * l) return profile.eps * xr;
        return std::log(build_qa_value(profile, xr));
    }
};

inline ZipperTrace make_zipper_trace(const QaProfile& p) {
    validate(p);
    ZipperTrace t;
    t.profile = p;
    t.a = 1.0 - p.c * p.eps;
    if (t.a < 0.0 || t.a >= 1.0 + 1e-15)
        throw std::invalid_argument("make_zipper_trace: need a = 1 - c*eps in [0, 1)");
    return t;
}

// Fourier-space solution of L w = 0 with Dirichlet data w(x,0): modes
// w_hat(n) with decay rates sqrt(1 + eps^2 (2n+i)^2), principal branch.
struct SelfDualSolution {
    double eps = 0.0;
    double ell = 0.0;
    double a = 0.0;  // Dirichlet fraction of the trace
    std::vector<std::complex<double>> modes;       // n = 0..N
    std::vector<std::complex<double>> decay_rates; // lambda_n, n = 0..N
    std::function<double(double)> trace;           // exact boundary data
    std::function<double(double)> log_trace;

    int max_mode() const { return int(modes.size()) - 1; }

    std::complex<double> mode(int n) const {
        if (n >= 0) return modes[n];
        return std::conj(modes[-n]);
    }
    std::complex<double> decay_rate(int n) const {
        if (n >= 0) return decay_rates[n];
        return std::conj(decay_rates[-n]);
    }
    std::complex<double> p_hat(int n) const { return 2.0 * decay_rate(n) * mode(n); }

    // w(x, y) for y >= 0; real by conjugate symmetry.
    double evaluate(double x, double y) const {
        const std::complex<double> u(std::cos(2.0 * std::numbers::pi * x / ell),
                                     std::sin(2.0 * std::numbers::pi * x / ell));
        std::complex<double> rot(1.0, 0.0);
        double s = (modes[0] * std::exp(-decay_rates[0] * y)).real();
        for (int n = 1; n < int(modes.size()); ++n) {
            rot *= u;
            s += 2.0 * (modes[n] * std::exp(-decay_rates[n] * y) * rot).real();
        }
        return s;
    }

    double evaluate_dy(double x, double y) const {
        const std::complex<double> u(std::cos(2.0 * std::numbers::pi * x / ell),
                                     std::sin(2.0 * std::numbers::pi * x / ell));
        std::complex<double> rot(1.0, 0.0);
        double s = (-decay_rates[0] * modes[0] * std::exp(-decay_rates[0] * y)).real();
        for (int n = 1; n < int(modes.size()); ++n) {
            rot *= u;
            s += 2.0 * (-decay_rates[n] * modes[n] * std::exp(-decay_rates[n] * y) * rot).real();
        }
        return s;
    }

    // Fills rows j = 0..n of a grid-shaped table; row 0 uses the exact trace.
    std::vector<double> evaluate_grid(const StripGrid& g) const {
        std::vector<double> w(g.nodes());
        const int N = max_mode();
        std::vector<std::complex<double>> coef(N + 1);
        for (int j = 1; j <= g.n; ++j) {
            const double y = g.y(j);
            for (int n = 0; n <= N; ++n) coef[n] = modes[n] * std::exp(-decay_rates[n] * y);
            const std::complex<double> u(std::cos(2.0 * std::numbers::pi / g.m),
                                         std::sin(2.0 * std::numbers::pi / g.m));
            std::complex<double> ui(1.0, 0.0);
            for (int i = 0; i < g.m; ++i) {
                std::complex<double> rot(1.0, 0.0);
                double s = coef[0].real();
                for (int n = 1; n <= N; ++n) {
                    rot *= ui;
                    s += 2.0 * (coef[n] * rot).real();
                }
                w[std::size_t(j) * g.m + i] = s;
                ui *= u;
            }
        }
        // careful: the incremental rotations above advance per column; redo row 0 exactly
        for (int i = 0; i < g.m; ++i) w[i] = trace(g.x(i));
        return w;
    }
};

inline std::complex<double> selfdual_decay_rate(double eps, int n) {
    const std::complex<double> z(1.0 + eps * eps * (4.0 * n * n - 1.0), 4.0 * n * eps * eps);
    return std::sqrt(z);
}

template <class Trace>
SelfDualSolution solve_dirichlet_selfdual(const Trace& boundary_trace, const StripGrid& g,
                                          int N = 0) {
    if (N != 0 && N < 8)
        throw std::invalid_argument("solve_dirichlet_selfdual: need N >= 8 modes");
    const double ell = g.ell();
    const int M = std::max(N > 0 ? 4 * N : 0, 8192);
    std::vector<double> samples(M);
    for (int s = 0; s < M; ++s) {
        samples[s] = boundary_trace(ell * s / M);
        if (!(samples[s] > 0.0))
            throw std::invalid_argument("solve_dirichlet_selfdual: trace must be positive");
    }
    const int n_avail = M / 2 - 1;
    std::vector<std::complex<double>> what(n_avail + 1, 0.0);
    for (int s = 0; s < M; ++s) {
        const double ph = -2.0 * std::numbers::pi * s / M;
        const std::complex<double> z(std::cos(ph), std::sin(ph));
        std::complex<double> u(1.0, 0.0);
        const double w = samples[s];
        for (int n = 0; n <= n_avail; ++n) {
            what[n] += w * u;
            if ((n & 511) == 511)  // refresh the rotation to curb drift
                u = std::polar(1.0, ph * (n + 1));
            else
                u *= z;
        }
    }
    for (auto& c : what) c /= double(M);
    int keep = N;
    if (keep == 0) {
        const double floor_amp = 1e-12 * std::abs(what[0]);
        keep = 8;
        for (int n = n_avail; n > 8; --n)
            if (std::abs(what[n]) >= floor_amp) {
                keep = n;
                break;
            }
    }
    keep = std::min(keep, n_avail);

    SelfDualSolution sol;
    sol.eps = g.eps;
    sol.ell = ell;
    sol.modes.assign(what.begin(), what.begin() + keep + 1);
    sol.decay_rates.resize(keep + 1);
    for (int n = 0; n <= keep; ++n) sol.decay_rates[n] = selfdual_decay_rate(g.eps, n);
    sol.trace = [boundary_trace](double x) { return boundary_trace(x); };
    sol.log_trace = [boundary_trace](double x) { return std::log(boundary_trace(x)); };
    return sol;
}

inline SelfDualSolution solve_dirichlet_selfdual(const ZipperTrace& tr, const StripGrid& g,
                                                 int N = 0) {
    SelfDualSolution sol = solve_dirichlet_selfdual<ZipperTrace>(tr, g, N);
    sol.a = tr.a;
    sol.log_trace = [tr](double x) { return tr.log_value(x); };
    return sol;
}

namespace detail {

// Distance on the cylinder from (x, y) to the segment [a l, l] x {0}.
inline double segment_distance(double x, double y, double a, double ell) {
    double xr = x - ell * std::floor(x / ell);
    double dx = 0.0;
    if (xr < a * ell) dx = std::min(xr, a * ell - xr);  // nearest endpoint: l == 0 or a l
    return std::hypot(dx, y);
}

} // namespace detail

// Local modification near the Neumann part: w~ = phi1 w + phi2 w2 with
// w2(x,y) = w(x,0) cosh(y), then theta = eps x - log w~. The result carries
// k = round(a m) and the fitted asymptotic phase shift; it is not projected.
inline PhaseField blend_test_function(const SelfDualSolution& sol, const StripGrid& g,
                                      double blend_radius) {
    if (!(blend_radius > 0.0))
        throw std::invalid_argument("blend_test_function: blend_radius must be positive");
    const double ell = g.ell();
    std::vector<double> w = sol.evaluate_grid(g);
    BoundaryConfig cfg;
    cfg.k = int(std::lround(sol.a * g.m));
    PhaseField f(g, cfg);
    for (int j = 0; j <= g.n; ++j) {
        const double y = g.y(j);
        for (int i = 0; i < g.m; ++i) {
            const double x = g.x(i);
            if (j == 0) {
                // w~(x,0) = w(x,0); theta(x,0) = eps x - log trace, exactly
                f.at(i, 0) = g.eps * x - sol.log_trace(x);
                continue;
            }
            const double d = detail::segment_distance(x, y, sol.a, ell);
            const double phi2 =
                1.0 - detail::smooth_step((d - 0.5 * blend_radius) / (0.5 * blend_radius));
            double wt = w[std::size_t(j) * g.m + i];
            if (phi2 > 0.0) {
                const double w2 = sol.trace(x) * std::cosh(y);
                wt = (1.0 - phi2) * wt + phi2 * w2;
            }
            if (!(wt > 0.0))
                throw std::domain_error("blend_test_function: blended w is not positive");
            f.at(i, j) = g.eps * x - std::log(wt);
        }
    }
    // fit the asymptotic phase shift from the top row
    detail::Kahan acc;
    const double beta = g.beta();
    for (int i = 0; i < g.m; ++i)
        acc.add(f(i, g.n) - std::numbers::pi * i / g.m - beta * g.L);
    f.set_delta(acc.sum / g.m);
    return f;
}

struct ProbeParams {
    int m = 96;
    int n = 96;
    double L = 0.0;  // 0 -> max(20, 8/eps)
    double c = 1.0;
    double gamma = 0.5;
    double blend_radius = 0.0;  // 0 -> 4 zeta
    int modes = 0;              // 0 -> auto truncation
};

struct ProbeRow {
    double eps;
    EnergyBreakdown energy;
    PhaseField field;
};

// Energies of the blended test functions with 1 - a = c*eps; the table
// exhibits boundedness in eps.
inline std::vector<ProbeRow> upper_bound_probe(const std::vector<double>& eps_list,
                                               const ProbeParams& params = {}) {
    std::vector<ProbeRow> rows;
    rows.reserve(eps_list.size());
    for (double eps : eps_list) {
        if (!(eps > 0.0) || eps > 1.0)
            throw std::invalid_argument("upper_bound_probe: eps must lie in (0, 1]");
        const double L = params.L > 0.0 ? params.L : std::max(20.0, 8.0 / eps);
        StripGrid g = build_grid(eps, L, params.m, params.n);
        QaProfile prof = make_qa_profile(eps, params.c, params.gamma);
        ZipperTrace tr = make_zipper_trace(prof);
        SelfDualSolution sol = solve_dirichlet_selfdual(tr, g, params.modes);
        const double radius = params.blend_radius > 0.0 ? params.blend_radius : 4.0 * g.zeta;
        PhaseField f = blend_test_function(sol, g, radius);
        EnergyBreakdown e = energy(f);
        rows.push_back({eps, e, std::move(f)});
    }
    return rows;
}

} // namespace rcn
