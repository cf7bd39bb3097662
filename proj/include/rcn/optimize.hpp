#pragma once

// Minimization of the discrete energy over the free nodal values and the
// phase shift delta: Polak-Ribiere+ nonlinear conjugate gradient with a
// strong-Wolfe line search, plus the k-sweep and transition scan built on it.

#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rcn/energy.hpp"
#include "rcn/grid.hpp"
#include "rcn/selfdual.hpp"

namespace rcn {

enum class SeedKind { roll, knee, zipper };

inline const char* to_string(SeedKind k) {
    switch (k) {
        case SeedKind::roll: return "roll";
        case SeedKind::knee: return "knee";
        case SeedKind::zipper: return "zipper";
    }
    return "?";
}

inline SeedKind seed_kind_from_string(const std::string& s) {
    if (s == "roll") return SeedKind::roll;
    if (s == "knee") return SeedKind::knee;
    if (s == "zipper" || s == "zipper-seed") return SeedKind::zipper;
    throw std::invalid_argument("unknown seed kind: " + s);
}

// Initial fields projected onto the discrete boundary conditions.
inline PhaseField init_field(const StripGrid& g, const BoundaryConfig& cfg, SeedKind kind) {
    const double beta = g.beta();
    switch (kind) {
        case SeedKind::roll: {
            PhaseField f(g, cfg);
            for (int j = 0; j <= g.n; ++j)
                for (int i = 0; i < g.m; ++i)
                    f.at(i, j) = g.eps * g.x(i) + beta * g.y(j) + cfg.delta;
            f.project_constraints();
            return f;
        }
        case SeedKind::knee: {
            PhaseField f(g, cfg);
            const double shift = cfg.delta - (log_cosh(beta * g.L) - beta * g.L);
            for (int j = 0; j <= g.n; ++j)
                for (int i = 0; i < g.m; ++i)
                    f.at(i, j) = knee(g.x(i), g.y(j), g.eps) + shift;
            f.project_constraints();
            return f;
        }
        case SeedKind::zipper: {
            if (cfg.k <= 0 || cfg.k >= g.m)
                throw std::invalid_argument("init_field: zipper seed needs 0 < k < m");
            const double a = double(cfg.k) / g.m;
            QaProfile prof = make_qa_profile(g.eps, (1.0 - a) / g.eps);
            SelfDualSolution sol = solve_dirichlet_selfdual(make_zipper_trace(prof), g);
            PhaseField f = blend_test_function(sol, g, 4.0 * g.zeta);
            // blend rounds k the same way; re-bind to the requested config
            PhaseField out(g, BoundaryConfig{cfg.k, f.config().delta});
            out.values() = f.values();
            out.project_constraints();
            return out;
        }
    }
    throw std::invalid_argument("init_field: unknown seed kind");
}

struct MinimizeOptions {
    double tol = 1e-6;   // max-norm of the projected gradient
    int max_iters = 20000;
    double c1 = 1e-4;    // Armijo constant
    double c2 = 0.1;     // curvature constant
};

struct MinimizeResult {
    PhaseField field;
    EnergyBreakdown energy;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// The optimizer's delta coordinate acts through the smooth ramp chi(y/L)
// (0 on [0, 1/3], 1 on [2/3, 1]): stepping s adds s*chi(y_j/L) to every row
// and s to delta, the same variation used to move the asymptotic phase shift
// without disturbing the y = 0 data. This keeps the delta direction smooth;
// the reported EnergyGradient.ddelta stays the plain partial derivative.
struct Direction {
    std::vector<double> nodal;
    double ddelta = 0.0;
};

inline std::vector<double> delta_ramp(const StripGrid& g) {
    std::vector<double> chi(g.n + 1);
    for (int j = 0; j <= g.n; ++j) chi[j] = smooth_step(3.0 * (g.y(j) / g.L) - 1.0);
    return chi;
}

// gradient with respect to the ramped delta coordinate
inline double ramp_gradient(const EnergyGradient& g, const std::vector<double>& chi) {
    double s = g.ddelta;
    for (int j = 0; j <= g.n; ++j) {
        const double w = chi[j];
        if (w == 0.0) continue;
        for (int i = 0; i < g.m; ++i) s += w * g(i, j);
    }
    return s;
}

inline double dot(const EnergyGradient& a, const EnergyGradient& b) {
    double s = a.ddelta * b.ddelta;
    for (std::size_t p = 0; p < a.nodal.size(); ++p) s += a.nodal[p] * b.nodal[p];
    return s;
}

// theta += alpha * d on the free slots, then re-sync the eliminated unknowns.
inline void apply_step(PhaseField& f, const PhaseField& base, const Direction& d,
                       const std::vector<double>& chi, double alpha) {
    const StripGrid& g = f.grid();
    const std::vector<double>& b = base.values();
    std::vector<double>& v = f.values();
    for (int j = 0; j <= g.n; ++j) {
        const double ramp = alpha * d.ddelta * chi[j];
        const std::size_t row = std::size_t(j) * g.m;
        for (int i = 0; i < g.m; ++i) v[row + i] = b[row + i] + alpha * d.nodal[row + i] + ramp;
    }
    f.set_delta(base.config().delta + alpha * d.ddelta);
    f.project_constraints();
}

struct EvalWorkspace {
    Extended ext, gext;

    EnergyBreakdown eval(const PhaseField& f, EnergyGradient& grad) {
        ext.fill(f);
        EnergyBreakdown e = energy_gradient_raw(f.grid(), ext, gext);
        fold_gradient(f, gext, grad);
        return e;
    }
};

} // namespace detail

inline MinimizeResult minimize_field(const PhaseField& start, const MinimizeOptions& opt) {
    if (!(opt.tol > 0.0)) throw std::invalid_argument("minimize_field: tol must be positive");
    detail::EvalWorkspace ws;

    MinimizeResult res{start, {}, 0.0, 0, false};
    PhaseField& x = res.field;
    x.project_constraints();

    const std::vector<double> chi = detail::delta_ramp(x.grid());
    auto basis_dot = [&](const EnergyGradient& a, double ra, const detail::Direction& dir) {
        double s = ra * dir.ddelta;
        for (std::size_t p = 0; p < a.nodal.size(); ++p) s += a.nodal[p] * dir.nodal[p];
        return s;
    };

    EnergyGradient g, g_trial;
    EnergyBreakdown e = ws.eval(x, g);
    double rg = detail::ramp_gradient(g, chi);
    double rg_trial = 0.0;
    double gg = detail::dot(g, g) - g.ddelta * g.ddelta + rg * rg;

    const std::size_t nfree = x.grid().nodes() + 1;
    detail::Direction d;
    d.nodal.assign(g.nodal.size(), 0.0);
    auto steepest = [&]() {
        for (std::size_t p = 0; p < g.nodal.size(); ++p) d.nodal[p] = -g.nodal[p];
        d.ddelta = -rg;
    };
    steepest();

    PhaseField trial = x;
    double alpha_prev = 1e-3;
    double last_decrease = 0.0;
    int since_restart = 0;

    for (int iter = 0; iter < opt.max_iters; ++iter) {
        res.grad_norm = g.max_norm();
        res.iterations = iter;
        res.energy = e;
        if (res.grad_norm <= opt.tol) {
            res.converged = true;
            return res;
        }

        double dphi0 = basis_dot(g, rg, d);
        if (!(dphi0 < 0.0)) {
            steepest();
            since_restart = 0;
            dphi0 = basis_dot(g, rg, d);
            if (!(dphi0 < 0.0)) break;  // gradient numerically zero
        }

        // first-order warm start for the step length (same decrease as last step)
        if (iter > 0 && last_decrease > 0.0)
            alpha_prev = std::clamp(2.02 * last_decrease / (-dphi0), 1e-12, 1e6);

        // strong Wolfe line search (bracket + zoom)
        const double f0 = e.total;
        double lo_a = 0.0, lo_f = f0, lo_dphi = dphi0;
        double hi_a = 0.0, hi_f = 0.0;
        double alpha = alpha_prev;
        bool have_bracket = false, accepted = false;
        double acc_a = 0.0;
        EnergyBreakdown acc_e{};
        double best_a = 0.0, best_f = f0;
        EnergyBreakdown best_e = e;
        bool best_has_grad = false;

        for (int t = 0; t < 60 && !accepted && !have_bracket; ++t) {
            detail::apply_step(trial, x, d, chi, alpha);
            EnergyBreakdown et = ws.eval(trial, g_trial);
            rg_trial = detail::ramp_gradient(g_trial, chi);
            const double ft = et.total;
            if (ft > f0 + opt.c1 * alpha * dphi0 || (t > 0 && ft >= lo_f)) {
                hi_a = alpha;
                hi_f = ft;
                have_bracket = true;
                break;
            }
            const double dphit = basis_dot(g_trial, rg_trial, d);
            if (ft < best_f) {
                best_f = ft;
                best_a = alpha;
                best_e = et;
                best_has_grad = true;
            }
            if (std::abs(dphit) <= -opt.c2 * dphi0) {
                accepted = true;
                acc_a = alpha;
                acc_e = et;
                break;
            }
            if (dphit >= 0.0) {
                hi_a = lo_a;
                hi_f = lo_f;
                lo_a = alpha;
                lo_f = ft;
                lo_dphi = dphit;
                have_bracket = true;
                break;
            }
            lo_a = alpha;
            lo_f = ft;
            lo_dphi = dphit;
            alpha *= 2.5;
        }

        if (!accepted && have_bracket) {
            for (int t = 0; t < 60 && !accepted; ++t) {
                // quadratic interpolation with bisection safeguard
                double al;
                const double den = 2.0 * (hi_f - lo_f - lo_dphi * (hi_a - lo_a));
                if (den != 0.0) {
                    al = lo_a - lo_dphi * (hi_a - lo_a) * (hi_a - lo_a) / den;
                    const double w = 0.1 * std::abs(hi_a - lo_a);
                    const double a_min = std::min(lo_a, hi_a) + w;
                    const double a_max = std::max(lo_a, hi_a) - w;
                    if (!(al >= a_min && al <= a_max)) al = 0.5 * (lo_a + hi_a);
                } else {
                    al = 0.5 * (lo_a + hi_a);
                }
                if (std::abs(hi_a - lo_a) < 1e-18) break;
                detail::apply_step(trial, x, d, chi, al);
                EnergyBreakdown et = ws.eval(trial, g_trial);
                rg_trial = detail::ramp_gradient(g_trial, chi);
                const double ft = et.total;
                if (ft > f0 + opt.c1 * al * dphi0 || ft >= lo_f) {
                    hi_a = al;
                    hi_f = ft;
                    continue;
                }
                const double dphit = basis_dot(g_trial, rg_trial, d);
                if (ft < best_f) {
                    best_f = ft;
                    best_a = al;
                    best_e = et;
                    best_has_grad = true;
                }
                if (std::abs(dphit) <= -opt.c2 * dphi0) {
                    accepted = true;
                    acc_a = al;
                    acc_e = et;
                    break;
                }
                if (dphit * (hi_a - lo_a) >= 0.0) {
                    hi_a = lo_a;
                    hi_f = lo_f;
                }
                lo_a = al;
                lo_f = ft;
                lo_dphi = dphit;
            }
        }

        if (!accepted) {
            if (best_has_grad && best_f < f0) {
                // fall back to the best Armijo-decreasing point seen
                acc_a = best_a;
                acc_e = best_e;
                detail::apply_step(trial, x, d, chi, acc_a);
                acc_e = ws.eval(trial, g_trial);
                rg_trial = detail::ramp_gradient(g_trial, chi);
            } else if (since_restart > 0) {
                steepest();
                since_restart = 0;
                continue;  // retry along steepest descent
            } else {
                break;  // line search failed along steepest descent: give up
            }
        }

        // accept the step
        x.values() = trial.values();
        x.set_delta(trial.config().delta);
        last_decrease = e.total - acc_e.total;
        e = acc_e;
        alpha_prev = std::max(acc_a, 1e-12);

        const double gg_new =
            detail::dot(g_trial, g_trial) - g_trial.ddelta * g_trial.ddelta + rg_trial * rg_trial;
        const double cross = detail::dot(g_trial, g) - g_trial.ddelta * g.ddelta + rg_trial * rg;
        double beta = (gg_new - cross) / gg;
        if (!(beta > 0.0)) beta = 0.0;  // PR+ restart
        if (++since_restart >= int(nfree)) {
            beta = 0.0;
            since_restart = 0;
        }
        for (std::size_t p = 0; p < d.nodal.size(); ++p)
            d.nodal[p] = -g_trial.nodal[p] + beta * d.nodal[p];
        d.ddelta = -rg_trial + beta * d.ddelta;
        g = g_trial;
        rg = rg_trial;
        gg = gg_new;
        res.iterations = iter + 1;
    }

    res.grad_norm = g.max_norm();
    res.energy = e;
    res.converged = res.grad_norm <= opt.tol;
    return res;
}

inline MinimizeResult minimize_field(const PhaseField& start, double tol, int max_iters) {
    MinimizeOptions opt;
    opt.tol = tol;
    opt.max_iters = max_iters;
    return minimize_field(start, opt);
}

// Bilinear prolongation onto a finer grid, honoring the shift-periodic wrap
// through the ghost rules; the result is projected onto the target BCs.
inline PhaseField prolong(const PhaseField& coarse, const StripGrid& fine, int k_fine) {
    const StripGrid& gc = coarse.grid();
    PhaseField out(fine, BoundaryConfig{k_fine, coarse.config().delta});
    for (int j = 0; j <= fine.n; ++j) {
        const double yj = std::min(fine.y(j), gc.L);
        int jc = std::min(int(yj / gc.zeta), gc.n);
        const double fy = yj / gc.zeta - jc;
        for (int i = 0; i < fine.m; ++i) {
            const double xi = fine.x(i) / gc.eta;
            int ic = std::min(int(xi), gc.m - 1);
            const double fx = xi - ic;
            const double v00 = ghost_value(coarse, ic, jc);
            const double v10 = ghost_value(coarse, ic + 1, jc);
            const double v01 = ghost_value(coarse, ic, std::min(jc + 1, gc.n + 1));
            const double v11 = ghost_value(coarse, ic + 1, std::min(jc + 1, gc.n + 1));
            out.at(i, j) = (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 +
                           (1 - fx) * fy * v01 + fx * fy * v11;
        }
    }
    out.project_constraints();
    return out;
}

// Seeded minimization with coarse-to-fine continuation: the long-wavelength
// part of the minimizer is settled on coarsened grids before the full-grid
// conjugate-gradient polish. Halves the grid per level down to >= 24 nodes.
inline MinimizeResult minimize_continuation(const StripGrid& g, const BoundaryConfig& cfg,
                                            SeedKind kind, const MinimizeOptions& opt,
                                            int levels = 2) {
    std::vector<StripGrid> ladder{g};
    while (int(ladder.size()) <= levels) {
        const StripGrid& prev = ladder.back();
        if (prev.m / 2 < 24 || prev.n / 2 < 24) break;
        ladder.push_back(build_grid(prev.eps, prev.L, prev.m / 2, prev.n / 2));
    }

    PhaseField current(g, cfg);  // placeholder, replaced below
    bool have = false;
    for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
        const StripGrid& lg = *it;
        const bool finest = (lg.m == g.m && lg.n == g.n);
        const int k_here = finest ? cfg.k
                                  : std::clamp(int(std::lround(double(cfg.k) * lg.m / g.m)),
                                               cfg.k > 0 ? 1 : 0, lg.m - (cfg.k < g.m ? 1 : 0));
        PhaseField seed = have ? prolong(current, lg, k_here)
                               : init_field(lg, BoundaryConfig{k_here, cfg.delta}, kind);
        MinimizeOptions lopt = opt;
        if (!finest) {
            lopt.tol = std::max(opt.tol, 1e-7);
            lopt.max_iters = opt.max_iters;
        }
        MinimizeResult r = minimize_field(seed, lopt);
        if (finest) return r;
        current = std::move(r.field);
        have = true;
    }
    // ladder had a single rung
    return minimize_field(init_field(g, cfg, kind), opt);
}

struct SweepRecord {
    double eps = 0.0;
    int k = 0;
    double a = 0.0;
    double delta_star = 0.0;
    EnergyBreakdown energy;
    bool converged = false;
    int iterations = 0;
    SeedKind seed = SeedKind::knee;
    PhaseField field;
};

inline std::vector<SeedKind> default_seeds(int k, int m) {
    if (k <= 0 || k >= m) return {SeedKind::knee, SeedKind::roll};
    return {SeedKind::knee, SeedKind::zipper};
}

// Minimize over (field, delta) for each k, keeping the best seed per k.
inline std::vector<SweepRecord> sweep_a(const StripGrid& g, const std::vector<int>& k_list,
                                        const MinimizeOptions& opt = {}, int jobs = 1) {
    if (k_list.empty()) throw std::invalid_argument("sweep_a: empty k list");
    for (int k : k_list)
        if (k < 0 || k > g.m) throw std::invalid_argument("sweep_a: k outside [0, m]");

    std::vector<std::optional<SweepRecord>> slots(k_list.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= k_list.size()) return;
            const int k = k_list[idx];
            std::optional<SweepRecord> best;
            for (SeedKind kind : default_seeds(k, g.m)) {
                const double delta0 = log_cosh(g.beta() * g.L) - g.beta() * g.L;
                MinimizeResult r =
                    minimize_continuation(g, BoundaryConfig{k, delta0}, kind, opt);
                if (!best || r.energy.total < best->energy.total) {
                    SweepRecord rec{g.eps,
                                    k,
                                    double(k) / g.m,
                                    r.field.config().delta,
                                    r.energy,
                                    r.converged,
                                    r.iterations,
                                    kind,
                                    r.field};
                    best = std::move(rec);
                }
            }
            slots[idx] = std::move(best);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<SweepRecord> out;
    out.reserve(k_list.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct TransitionParams {
    int m = 96;
    int n = 96;
    double L = 0.0;                  // 0 -> max(20, 8/eps) per eps
    std::vector<double> a_coarse;    // empty -> {0, 0.05, ..., 0.95}
    bool refine = true;
    int refine_radius = 5;           // +-nodes around the best k > 0
    MinimizeOptions opt;
    int jobs = 1;
};

struct EpsScan {
    double eps = 0.0;
    std::vector<SweepRecord> records;  // sorted by k
    int best = 0;                      // index of the global minimum
    int best_zipper = -1;              // index of the best k > 0 record
    double knee_energy_min = 0.0;      // best total at k = 0
};

struct TransitionResult {
    std::vector<EpsScan> scans;  // in the order of eps_list
    bool found = false;
    double eps_hi = 0.0;  // last eps with argmin a = 0
    double eps_lo = 0.0;  // first eps with argmin a > 0
};

inline double default_strip_height(double eps) { return std::max(20.0, 8.0 / eps); }

inline EpsScan scan_eps(double eps, const TransitionParams& p) {
    const double L = p.L > 0.0 ? p.L : default_strip_height(eps);
    StripGrid g = build_grid(eps, L, p.m, p.n);

    std::vector<double> a_coarse = p.a_coarse;
    if (a_coarse.empty())
        for (int t = 0; t < 20; ++t) a_coarse.push_back(0.05 * t);
    std::vector<int> k_list;
    for (double a : a_coarse) {
        const int k = int(std::lround(a * g.m));
        if (std::find(k_list.begin(), k_list.end(), k) == k_list.end()) k_list.push_back(k);
    }
    std::sort(k_list.begin(), k_list.end());
    std::vector<SweepRecord> records = sweep_a(g, k_list, p.opt, p.jobs);

    if (p.refine) {
        int kb = -1;
        double eb = 0.0;
        for (const auto& r : records)
            if (r.k > 0 && (kb < 0 || r.energy.total < eb)) {
                kb = r.k;
                eb = r.energy.total;
            }
        if (kb > 0) {
            std::vector<int> extra;
            for (int k = std::max(1, kb - p.refine_radius);
                 k <= std::min(g.m - 1, kb + p.refine_radius); ++k)
                if (std::find(k_list.begin(), k_list.end(), k) == k_list.end())
                    extra.push_back(k);
            if (!extra.empty()) {
                std::vector<SweepRecord> more = sweep_a(g, extra, p.opt, p.jobs);
                for (auto& r : more) records.push_back(std::move(r));
            }
        }
        std::sort(records.begin(), records.end(),
                  [](const SweepRecord& a, const SweepRecord& b) { return a.k < b.k; });
    }

    EpsScan scan;
    scan.eps = eps;
    scan.records = std::move(records);
    for (int i = 0; i < int(scan.records.size()); ++i) {
        const auto& r = scan.records[i];
        if (r.energy.total < scan.records[scan.best].energy.total) scan.best = i;
        if (r.k > 0 &&
            (scan.best_zipper < 0 || r.energy.total < scan.records[scan.best_zipper].energy.total))
            scan.best_zipper = i;
        if (r.k == 0) scan.knee_energy_min = r.energy.total;
    }
    return scan;
}

// Locates the eps bracket across which argmin_a jumps from 0 to a > 0.
// eps_list must be sorted in descending order with at least two entries.
inline TransitionResult find_transition(const std::vector<double>& eps_list,
                                        const TransitionParams& params = {}) {
    if (eps_list.size() < 2)
        throw std::invalid_argument("find_transition: need at least two eps values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("find_transition: eps_list must be strictly descending");

    TransitionResult res;
    for (double eps : eps_list) res.scans.push_back(scan_eps(eps, params));
    for (std::size_t i = 0; i + 1 < res.scans.size(); ++i) {
        const bool hi_knee = res.scans[i].records[res.scans[i].best].k == 0;
        const bool lo_zip = res.scans[i + 1].records[res.scans[i + 1].best].k > 0;
        if (hi_knee && lo_zip) {
            res.found = true;
            res.eps_hi = res.scans[i].eps;
            res.eps_lo = res.scans[i + 1].eps;
            break;
        }
    }
    return res;
}

} // namespace rcn
