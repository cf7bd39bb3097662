#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rcn/optimize.hpp"

using namespace rcn;
using Catch::Approx;

TEST_CASE("roll seed leaves energy only near the tied boundary rows") {
    StripGrid g = build_grid(0.7, 10.0, 32, 32);
    PhaseField f = init_field(g, BoundaryConfig{0, 0.0}, SeedKind::roll);
    const double everything = energy(f).total;
    const double bottom = energy_in_box(f, 0.0, g.ell(), 0.0, 2.5 * g.zeta).total;
    CHECK(everything == Approx(bottom).epsilon(1e-10));
    CHECK(energy_in_box(f, 0.0, g.ell(), 3.5 * g.zeta, g.L).total < 1e-18);
}

TEST_CASE("knee seed energy approaches the closed form under refinement") {
    auto total = [](int s) {
        StripGrid g = build_grid(0.8, 20.0, s, s);
        const double d0 = log_cosh(g.beta() * g.L) - g.beta() * g.L;
        return energy(init_field(g, BoundaryConfig{0, d0}, SeedKind::knee)).total;
    };
    // the tie projection adds an O(zeta) boundary distortion on top of the
    // O(zeta^2) sampling error, so the seed converges at first order
    const double exact = knee_energy(0.8);
    CHECK(std::abs(total(64) - exact) < 0.35 * exact);
    CHECK(std::abs(total(128) - exact) < 0.20 * exact);
    CHECK(std::abs(total(128) - exact) < std::abs(total(64) - exact));
}

TEST_CASE("zipper seed is admissible and finite") {
    StripGrid g = build_grid(0.4, 20.0, 48, 48);
    PhaseField f = init_field(g, BoundaryConfig{20, 0.0}, SeedKind::zipper);
    CHECK(f.satisfies_constraints(0.0));
    CHECK(f.all_finite());
    CHECK(energy(f).total > 0.0);
    CHECK_THROWS_AS(init_field(g, BoundaryConfig{0, 0.0}, SeedKind::zipper),
                    std::invalid_argument);
    CHECK_THROWS_AS(init_field(g, BoundaryConfig{g.m, 0.0}, SeedKind::zipper),
                    std::invalid_argument);
}

TEST_CASE("minimize from a roll recovers the knee branch") {
    StripGrid g = build_grid(0.9, 20.0, 64, 64);
    MinimizeOptions opt;
    opt.tol = 1e-6;
    opt.max_iters = 8000;
    MinimizeResult roll = minimize_continuation(g, BoundaryConfig{0, 0.0}, SeedKind::roll, opt);
    MinimizeResult knee =
        minimize_continuation(g, BoundaryConfig{0, 0.0}, SeedKind::knee, opt);
    // at k = 0 the phase shift is a gauge freedom (x-translation), so only the
    // energies are comparable; both land on the knee branch
    const double exact = knee_energy(0.9);
    CHECK(roll.energy.total < 1.25 * exact);
    CHECK(roll.energy.total > 0.75 * exact);
    CHECK(std::abs(roll.energy.total - knee.energy.total) < 0.05 * exact);
    CHECK(roll.field.satisfies_constraints(1e-10));
}

TEST_CASE("restarting from a converged iterate is a fixed point") {
    StripGrid g = build_grid(0.8, 12.0, 24, 24);
    MinimizeOptions opt;
    opt.tol = 2e-5;
    opt.max_iters = 20000;
    const double d0 = log_cosh(g.beta() * g.L) - g.beta() * g.L;
    MinimizeResult r1 = minimize_field(init_field(g, BoundaryConfig{0, d0}, SeedKind::knee), opt);
    REQUIRE(r1.converged);
    MinimizeResult r2 = minimize_field(r1.field, opt);
    CHECK(r2.iterations == 0);
    CHECK(r2.converged);
    CHECK(std::abs(r2.energy.total - r1.energy.total) < 1e-10);
}

TEST_CASE("descent is monotone across increasing iteration budgets") {
    StripGrid g = build_grid(0.6, 10.0, 24, 24);
    PhaseField seed = init_field(g, BoundaryConfig{8, 0.0}, SeedKind::knee);
    double prev = energy(seed).total;
    for (int iters : {5, 25, 125, 600}) {
        MinimizeOptions opt;
        opt.tol = 1e-9;
        opt.max_iters = iters;
        MinimizeResult r = minimize_field(seed, opt);
        CHECK(r.energy.total <= prev + 1e-12 * (1.0 + std::abs(prev)));
        prev = r.energy.total;
    }
}

TEST_CASE("iterates preserve the discrete boundary conditions exactly") {
    StripGrid g = build_grid(0.5, 10.0, 24, 24);
    MinimizeOptions opt;
    opt.tol = 1e-5;
    opt.max_iters = 300;
    MinimizeResult r = minimize_field(init_field(g, BoundaryConfig{10, 0.0}, SeedKind::knee), opt);
    CHECK(r.field.satisfies_constraints(0.0));
    EnergyGradient gr = gradient(r.field);
    for (int i = 0; i < 10; ++i) CHECK(gr(i, 0) == 0.0);
    for (int i = 10; i < g.m; ++i) CHECK(gr(i, 1) == 0.0);
}

TEST_CASE("sweep keeps the best seed per k and validates input") {
    StripGrid g = build_grid(0.8, 10.0, 16, 16);
    MinimizeOptions opt;
    opt.tol = 1e-5;
    opt.max_iters = 800;
    CHECK_THROWS_AS(sweep_a(g, {}, opt, 1), std::invalid_argument);
    CHECK_THROWS_AS(sweep_a(g, {-1}, opt, 1), std::invalid_argument);

    std::vector<SweepRecord> recs = sweep_a(g, {0, 8, g.m}, opt, 2);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].k == 0);
    CHECK(recs[0].a == 0.0);
    // at large eps the knee branch wins, and a = 1 is far worse than a = 0
    const auto* best = &recs[0];
    for (const auto& r : recs)
        if (r.energy.total < best->energy.total) best = &r;
    CHECK(best->k == 0);
    CHECK(recs[2].energy.total > recs[0].energy.total);
}

TEST_CASE("sweep is deterministic across thread counts") {
    StripGrid g = build_grid(0.7, 10.0, 16, 16);
    MinimizeOptions opt;
    opt.tol = 1e-5;
    opt.max_iters = 400;
    std::vector<SweepRecord> a = sweep_a(g, {0, 4, 8}, opt, 1);
    std::vector<SweepRecord> b = sweep_a(g, {0, 4, 8}, opt, 2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].energy.total == b[i].energy.total);
        CHECK(a[i].delta_star == b[i].delta_star);
    }
}

TEST_CASE("find_transition validates its eps list") {
    TransitionParams params;
    params.m = 16;
    params.n = 16;
    CHECK_THROWS_AS(find_transition({0.5}, params), std::invalid_argument);
    CHECK_THROWS_AS(find_transition({0.5, 0.6}, params), std::invalid_argument);
}

TEST_CASE("no jump is reported when the knee wins throughout") {
    TransitionParams params;
    params.m = 16;
    params.n = 16;
    params.a_coarse = {0.0, 0.25, 0.5};
    params.refine = false;
    params.opt.tol = 1e-5;
    params.opt.max_iters = 400;
    params.jobs = 2;
    TransitionResult res = find_transition({0.9, 0.8}, params);
    CHECK_FALSE(res.found);
    for (const auto& scan : res.scans) CHECK(scan.records[scan.best].k == 0);
}

TEST_CASE("prolongation refines a field consistently") {
    StripGrid gc = build_grid(0.6, 10.0, 24, 24);
    const double d0 = log_cosh(gc.beta() * gc.L) - gc.beta() * gc.L;
    PhaseField coarse = init_field(gc, BoundaryConfig{0, d0}, SeedKind::knee);
    StripGrid gf = build_grid(0.6, 10.0, 48, 48);
    PhaseField fine = prolong(coarse, gf, 0);
    CHECK(fine.satisfies_constraints(0.0));
    // bilinear interpolation should track the analytic knee away from the tie rows
    double worst = 0.0;
    for (int j = 4; j <= gf.n; ++j)
        for (int i = 0; i < gf.m; ++i)
            worst = std::max(worst, std::abs(fine(i, j) - knee(gf.x(i), gf.y(j), 0.6)));
    CHECK(worst < 1e-2);
}
