
// Command-line front end: single minimizations, k-sweeps, the energy curve
// with transition bracketing, lower-bound certificates, the self-dual upper
// bound probe, and the knee closed-form table. All outputs are CSV plus the
// plain-text field format.
//
// Exit codes: 0 success, 1 validation/parse error, 2 non-convergence,
// 3 bound violation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rcn/bounds.hpp"
#include "rcn/energy.hpp"
#include "rcn/field_io.hpp"
#include "rcn/grid.hpp"
#include "rcn/optimize.hpp"
#include "rcn/selfdual.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitBoundViolation = 3;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream os(std::filesystem::path(dir) / name);
    if (!os) throw std::runtime_error("cannot open output file " + name + " in " + dir);
    return os;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        out.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

void write_breakdown_row(std::ostream& os, double eps, double a, double delta,
                         const rcn::EnergyBreakdown& e) {
    os << fmt(eps) << ',' << fmt(a) << ',' << fmt(delta) << ',' << fmt(e.bending) << ','
       << fmt(e.strain) << ',' << fmt(e.total) << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<rcn::SweepRecord>& records) {
    os << "eps,a,delta,bending,strain,total,converged,iters\n";
    for (const auto& r : records)
        os << fmt(r.eps) << ',' << fmt(r.a) << ',' << fmt(r.delta_star) << ','
           << fmt(r.energy.bending) << ',' << fmt(r.energy.strain) << ','
           << fmt(r.energy.total) << ',' << (r.converged ? 1 : 0) << ',' << r.iterations
           << '\n';
}

void write_bounds_row(std::ostream& os, const rcn::BoundsReport& rep) {
    os << (rep.variant == rcn::SubordinateField::Variant::squeeze ? "squeeze" : "extend")
       << ',' << fmt(rep.eps) << ',' << fmt(rep.a) << ',' << fmt(rep.lhs) << ','
       << fmt(rep.rhs) << ',' << fmt(rep.c_sub) << ',' << fmt(rep.area) << ','
       << fmt(rep.boundary) << ',' << fmt(rep.div_mismatch_rel) << ','
       << fmt(rep.squeeze_bound) << ',' << fmt(rep.extend_bound) << ','
       << fmt(rep.band_lo) << ',' << fmt(rep.band_hi) << ',' << (rep.pass ? 1 : 0) << '\n';
}

std::vector<int> k_values(const std::string& k_list, const std::string& a_list, int m) {
    std::vector<int> ks;
    if (!k_list.empty())
        for (double v : parse_list(k_list)) ks.push_back(int(std::lround(v)));
    else if (!a_list.empty())
        for (double a : parse_list(a_list)) ks.push_back(int(std::lround(a * m)));
    else
        for (int t = 0; t < 20; ++t) ks.push_back(int(std::lround(0.05 * t * m)));
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regularized Cross-Newell strip minimizer"};
    app.require_subcommand(1);
    app.set_config("--config");

    std::string out_dir = ".";
    int jobs = 2;
    app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    app.add_option("--jobs", jobs, "sweep-level parallelism")->capture_default_str();

    // ---- minimize ----------------------------------------------------------
    double eps = 0.5, L = 0.0, tol = 1e-6, delta0 = 0.0;
    int k = 0, m = 96, n = 96, max_iters = 6000, levels = 2;
    std::string seed = "auto";
    auto* cmd_min = app.add_subcommand("minimize", "minimize one configuration");
    cmd_min->fallthrough();
    cmd_min->add_option("--eps", eps, "wavenumber parameter in (0,1]")->required();
    cmd_min->add_option("--k", k, "Dirichlet node count")->required();
    cmd_min->add_option("--m", m, "x nodes");
    cmd_min->add_option("--n", n, "y cells");
    cmd_min->add_option("--L", L, "strip height (0 = max(20, 8/eps))");
    cmd_min->add_option("--tol", tol, "gradient max-norm tolerance");
    cmd_min->add_option("--max-iters", max_iters, "iteration cap");
    cmd_min->add_option("--seed", seed, "roll|knee|zipper|auto");
    cmd_min->add_option("--delta0", delta0, "initial phase shift");
    cmd_min->add_option("--levels", levels, "coarse-to-fine continuation levels");

    // ---- sweep-a -----------------------------------------------------------
    std::string k_list, a_list;
    bool refine = true;
    auto* cmd_sweep = app.add_subcommand("sweep-a", "minimize across Dirichlet fractions");
    cmd_sweep->fallthrough();
    cmd_sweep->add_option("--eps", eps, "wavenumber parameter")->required();
    cmd_sweep->add_option("--m", m, "x nodes");
    cmd_sweep->add_option("--n", n, "y cells");
    cmd_sweep->add_option("--L", L, "strip height (0 = auto)");
    cmd_sweep->add_option("--k-list", k_list, "comma-separated k values");
    cmd_sweep->add_option("--a-list", a_list, "comma-separated Dirichlet fractions");
    cmd_sweep->add_option("--tol", tol, "gradient tolerance");
    cmd_sweep->add_option("--max-iters", max_iters, "iteration cap");
    cmd_sweep->add_flag("--refine,!--no-refine", refine, "refine around the best k > 0");

    // ---- energy-curve ------------------------------------------------------
    std::string eps_list_str;
    auto* cmd_curve =
        app.add_subcommand("energy-curve", "global minimum vs eps and transition bracket");
    cmd_curve->fallthrough();
    cmd_curve->add_option("--eps-list", eps_list_str, "descending eps values")->required();
    cmd_curve->add_option("--m", m, "x nodes");
    cmd_curve->add_option("--n", n, "y cells");
    cmd_curve->add_option("--L", L, "strip height (0 = auto per eps)");
    cmd_curve->add_option("--a-list", a_list, "coarse Dirichlet fractions");
    cmd_curve->add_option("--tol", tol, "gradient tolerance");
    cmd_curve->add_option("--max-iters", max_iters, "iteration cap");
    cmd_curve->add_flag("--refine,!--no-refine", refine, "refine around the best k > 0");

    // ---- bounds-check ------------------------------------------------------
    std::string field_path, variant = "both";
    double slack = 0.01;
    auto* cmd_bounds = app.add_subcommand("bounds-check", "lower-bound certificate");
    cmd_bounds->fallthrough();
    cmd_bounds->add_option("field", field_path, "field file")->required();
    cmd_bounds->add_option("--variant", variant, "squeeze|extend|both");
    cmd_bounds->add_option("--slack", slack, "certificate slack");

    // ---- selfdual-probe ----------------------------------------------------
    double probe_c = 1.0, probe_gamma = 0.5, blend_radius = 0.0;
    int modes = 0;
    auto* cmd_probe = app.add_subcommand("selfdual-probe", "upper-bound test functions");
    cmd_probe->fallthrough();
    cmd_probe->add_option("--eps-list", eps_list_str, "eps values")->required();
    cmd_probe->add_option("--m", m, "x nodes");
    cmd_probe->add_option("--n", n, "y cells");
    cmd_probe->add_option("--L", L, "strip height (0 = auto per eps)");
    cmd_probe->add_option("--c", probe_c, "width parameter, 1 - a = c*eps");
    cmd_probe->add_option("--gamma", probe_gamma, "overshoot in (0,1)");
    cmd_probe->add_option("--modes", modes, "Fourier modes (0 = auto)");
    cmd_probe->add_option("--blend-radius", blend_radius, "boundary blend radius (0 = 4*zeta)");
    bool save_fields = false;
    cmd_probe->add_flag("--save-fields", save_fields, "write each test function as a field file");

    // ---- knee --------------------------------------------------------------
    std::string knee_out = "knee.csv";
    auto* cmd_knee = app.add_subcommand("knee", "closed-form knee energy table");
    cmd_knee->fallthrough();
    cmd_knee->add_option("--eps-list", eps_list_str, "eps values")->required();
    cmd_knee->add_option("--out", knee_out, "output CSV name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*cmd_min) {
            const double height = L > 0 ? L : rcn::default_strip_height(eps);
            rcn::StripGrid grid = rcn::build_grid(eps, height, m, n);
            rcn::MinimizeOptions opt;
            opt.tol = tol;
            opt.max_iters = max_iters;
            rcn::BoundaryConfig cfg{k, delta0};

            std::optional<rcn::MinimizeResult> best;
            if (seed == "auto") {
                for (rcn::SeedKind kind : rcn::default_seeds(k, grid.m)) {
                    rcn::MinimizeResult r =
                        rcn::minimize_continuation(grid, cfg, kind, opt, levels);
                    if (!best || r.energy.total < best->energy.total) best = std::move(r);
                }
            } else {
                best = rcn::minimize_continuation(grid, cfg, rcn::seed_kind_from_string(seed),
                                                  opt, levels);
            }
            std::filesystem::create_directories(out_dir);
            rcn::write_field((std::filesystem::path(out_dir) / "minimize.field").string(),
                             best->field);
            auto os = open_out(out_dir, "minimize.csv");
            os << "eps,a,delta,bending,strain,total\n";
            write_breakdown_row(os, eps, double(k) / m, best->field.config().delta,
                                best->energy);
            std::cout << "E = " << fmt(best->energy.total)
                      << "  delta = " << fmt(best->field.config().delta)
                      << "  grad_norm = " << fmt(best->grad_norm)
                      << "  iters = " << best->iterations
                      << (best->converged ? "" : "  [not converged]") << "\n";
            return best->converged ? kExitOk : kExitNoConvergence;
        }

        if (*cmd_sweep) {
            const double height = L > 0 ? L : rcn::default_strip_height(eps);
            rcn::StripGrid grid = rcn::build_grid(eps, height, m, n);
            std::vector<int> ks = k_values(k_list, a_list, grid.m);
            if (ks.empty()) throw std::invalid_argument("sweep-a: empty k list");
            rcn::MinimizeOptions opt;
            opt.tol = tol;
            opt.max_iters = max_iters;
            std::vector<rcn::SweepRecord> records = rcn::sweep_a(grid, ks, opt, jobs);
            auto os = open_out(out_dir, "sweep.csv");
            write_sweep_csv(os, records);
            const auto* best = &records.front();
            for (const auto& r : records)
                if (r.energy.total < best->energy.total) best = &r;
            std::cout << "argmin a = " << fmt(best->a) << "  E = " << fmt(best->energy.total)
                      << "\n";
            return best->converged ? kExitOk : kExitNoConvergence;
        }

        if (*cmd_curve) {
            std::vector<double> eps_list = parse_list(eps_list_str);
            rcn::TransitionParams params;
            params.m = m;
            params.n = n;
            params.L = L;
            params.refine = refine;
            params.opt.tol = tol;
            params.opt.max_iters = max_iters;
            params.jobs = jobs;
            if (!a_list.empty()) params.a_coarse = parse_list(a_list);
            rcn::TransitionResult res = rcn::find_transition(eps_list, params);

            auto os = open_out(out_dir, "curve.csv");
            os << "eps,a,delta,bending,strain,total,converged,iters\n";
            for (const auto& scan : res.scans) {
                const auto& r = scan.records[scan.best];
                os << fmt(scan.eps) << ',' << fmt(r.a) << ',' << fmt(r.delta_star) << ','
                   << fmt(r.energy.bending) << ',' << fmt(r.energy.strain) << ','
                   << fmt(r.energy.total) << ',' << (r.converged ? 1 : 0) << ','
                   << r.iterations << '\n';
            }
            auto os2 = open_out(out_dir, "curve_records.csv");
            std::vector<rcn::SweepRecord> all;
            for (const auto& scan : res.scans)
                for (const auto& r : scan.records) all.push_back(r);
            write_sweep_csv(os2, all);
            if (res.found)
                std::cout << "transition bracket: eps in (" << fmt(res.eps_lo) << ", "
                          << fmt(res.eps_hi) << ")\n";
            else
                std::cout << "no argmin jump detected in the given eps range\n";
            return kExitOk;
        }

        if (*cmd_bounds) {
            rcn::PhaseField field = rcn::read_field(field_path);
            rcn::EnergyBreakdown e = rcn::energy(field);
            std::vector<rcn::BoundsReport> reports;
            if (variant == "squeeze" || variant == "both")
                reports.push_back(rcn::certify_lower_bound(
                    field, e, rcn::SubordinateField::Variant::squeeze, slack));
            if (variant == "extend" || variant == "both")
                reports.push_back(rcn::certify_lower_bound(
                    field, e, rcn::SubordinateField::Variant::extend, slack));
            if (reports.empty())
                throw std::invalid_argument("bounds-check: variant must be squeeze|extend|both");
            auto os = open_out(out_dir, "bounds.csv");
            os << "variant,eps,a,lhs,rhs,c_sub,area,boundary,div_mismatch_rel,"
                  "squeeze_bound,extend_bound,band_lo,band_hi,pass\n";
            bool all_pass = true;
            for (const auto& rep : reports) {
                write_bounds_row(os, rep);
                all_pass = all_pass && rep.pass;
                std::cout << (rep.variant == rcn::SubordinateField::Variant::squeeze
                                  ? "squeeze"
                                  : "extend")
                          << ": F = " << fmt(rep.lhs) << " >= " << fmt(rep.rhs)
                          << (rep.pass ? "  ok" : "  VIOLATED") << "\n";
            }
            return all_pass ? kExitOk : kExitBoundViolation;
        }

        if (*cmd_probe) {
            std::vector<double> eps_list = parse_list(eps_list_str);
            rcn::ProbeParams pp;
            pp.m = m;
            pp.n = n;
            pp.L = L;
            pp.c = probe_c;
            pp.gamma = probe_gamma;
            pp.modes = modes;
            pp.blend_radius = blend_radius;
            std::vector<rcn::ProbeRow> rows = rcn::upper_bound_probe(eps_list, pp);
            auto os = open_out(out_dir, "probe.csv");
            os << "eps,energy_bending,energy_strain,energy_total\n";
            for (const auto& r : rows) {
                os << fmt(r.eps) << ',' << fmt(r.energy.bending) << ','
                   << fmt(r.energy.strain) << ',' << fmt(r.energy.total) << '\n';
                if (save_fields) {
                    char name[64];
                    std::snprintf(name, sizeof name, "probe_%g.field", r.eps);
                    rcn::write_field((std::filesystem::path(out_dir) / name).string(), r.field);
                }
            }
            return kExitOk;
        }

        if (*cmd_knee) {
            std::vector<double> eps_list = parse_list(eps_list_str);
            auto os = open_out(out_dir, knee_out);
            os << "eps,energy\n";
            for (double e : eps_list) {
                if (!(e > 0.0) || e > 1.0)
                    throw std::invalid_argument("knee: eps must lie in (0, 1]");
                os << fmt(e) << ',' << fmt(rcn::knee_energy(e)) << '\n';
            }
            return kExitOk;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
