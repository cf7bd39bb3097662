#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "rcn/selfdual.hpp"

using namespace rcn;
using Catch::Approx;

namespace {
constexpr double pi = std::numbers::pi;

// Independent route for theta_3: periodized Gaussian with the sqrt(4 pi t)/l
// normalization (Poisson summation of the cosine series).
double gaussian_comb(double u, double t, double ell) {
    double s = 0.0;
    for (int n = -400; n <= 400; ++n) s += std::exp(-std::pow((u - n) * ell, 2) / (4.0 * t));
    return s * ell / std::sqrt(4.0 * pi * t);
}
} // namespace

TEST_CASE("knee solution values") {
    CHECK(knee(1.7, 0.0, 0.35) == Approx(0.35 * 1.7).margin(1e-15));
    for (double y : {0.0, 1.0, 7.3}) CHECK(knee(2.0, y, 1.0) == Approx(2.0).margin(1e-15));
    // asymptotic phase shift -log 2
    const double eps = 0.6, beta = 0.8;
    CHECK(knee(0.0, 40.0, eps) - beta * 40.0 == Approx(-std::numbers::ln2).margin(1e-12));
    // closed-form strip energies
    CHECK(knee_energy(0.8) == Approx(1.1309733552923256).epsilon(1e-12));
    CHECK(knee_energy(0.5) == Approx(5.441398092702653).epsilon(1e-12));
}

TEST_CASE("self-dual residual of the sampled knee refines at second order") {
    auto max_interior = [](int s) {
        StripGrid g = build_grid(0.8, 10.0, s, s);
        PhaseField f = sample_knee(g);
        std::vector<double> r = selfdual_residual(f);
        double worst = 0.0;
        for (int j = 1; j < g.n; ++j)
            for (int i = 0; i < g.m; ++i)
                worst = std::max(worst, std::abs(r[std::size_t(j) * g.m + i]));
        return worst;
    };
    const double r1 = max_interior(32), r2 = max_interior(64), r3 = max_interior(128);
    CHECK(std::log2(r1 / r2) > 1.8);
    CHECK(std::log2(r2 / r3) > 1.8);
}

TEST_CASE("self-dual residual trivia") {
    StripGrid g = build_grid(0.7, 10.0, 24, 20);
    PhaseField roll(g, BoundaryConfig{0, 0.1});
    for (int j = 0; j <= g.n; ++j)
        for (int i = 0; i < g.m; ++i)
            roll.at(i, j) = g.eps * g.x(i) + g.beta() * g.y(j) + 0.1;
    for (double v : selfdual_residual(roll)) CHECK(std::abs(v) < 1e-10);

    PhaseField zero(g, BoundaryConfig{0, 0.0});
    std::vector<double> r = selfdual_residual(zero);
    for (int j = 1; j < g.n; ++j)
        for (int i = 1; i + 1 < g.m; ++i)
            CHECK(r[std::size_t(j) * g.m + i] == Approx(-1.0).margin(1e-12));
}

TEST_CASE("theta3 series") {
    CHECK(theta3(0.37, 1e6, 2 * pi) == Approx(1.0).margin(1e-12));
    for (double u : {0.0, 0.21, 0.73})
        CHECK(theta3(u + 1.0, 0.4, 5.0) == Approx(theta3(u, 0.4, 5.0)).epsilon(1e-13));
    CHECK(theta3(0.3, 0.7, 2 * pi) == Approx(0.597680260205525).epsilon(1e-12));
    CHECK_THROWS_AS(theta3(0.1, 0.0, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(theta3(0.1, -1.0, 5.0), std::invalid_argument);
}

TEST_CASE("theta3 agrees with the Gaussian comb on sampled triples") {
    std::mt19937 rng(314159);
    std::uniform_real_distribution<double> Du(-2.0, 2.0), Dt(0.05, 10.0), De(0.15, 1.0);
    for (int s = 0; s < 50; ++s) {
        const double u = Du(rng);
        const double ell = pi / De(rng);
        const double t = Dt(rng) * ell * ell / (4 * pi);
        const double a = theta3(u, t, ell, 1e-15);
        const double b = gaussian_comb(u, t, ell);
        CHECK(std::abs(a - b) / std::abs(b) < 1e-10);
    }
}

TEST_CASE("q_a endpoints and bounds") {
    const double eps = 0.3;
    QaProfile p = make_qa_profile(eps, 1.0);
    const double ell = pi / eps, cpi = p.c * pi;
    const double epi = std::exp(pi);

    CHECK(build_qa_value(p, ell - cpi) == Approx(std::exp(pi - eps * cpi)).epsilon(1e-13));
    CHECK(build_qa_value(p, ell) == Approx(1.0).epsilon(1e-13));
    CHECK(qa_tanh(p, ell - 0.5 * cpi) == Approx(0.5 * (epi + 1.0)).epsilon(1e-13));

    // exact agreement with the target exponentials near both endpoints
    for (double h : {0.0, p.sigma_small * 0.25, p.sigma_small * 0.5}) {
        CHECK(build_qa_value(p, ell - cpi + h) == Approx(std::exp(eps * (ell - cpi + h))));
        CHECK(build_qa_value(p, ell - h) == Approx(std::exp(eps * (ell - h) - pi)));
    }

    const QaSamples samples = build_qa(p, 800);
    const double floor = std::min(1.0 - p.gamma, std::exp(pi - eps * cpi)) - 1e-9;
    for (double v : samples.value) CHECK(v > floor);

    QaProfile bad = p;
    bad.sigma_small = p.nu;  // violates sigma << nu
    CHECK_THROWS_AS(build_qa_value(bad, ell - 1.0), std::invalid_argument);
    QaProfile bad2 = p;
    bad2.gamma = 1.5;
    CHECK_THROWS_AS(build_qa_value(bad2, ell - 1.0), std::invalid_argument);
}

TEST_CASE("constant trace solves with a single decaying mode") {
    StripGrid g = build_grid(0.6, 10.0, 32, 24);
    SelfDualSolution sol = solve_dirichlet_selfdual([](double) { return 1.0; }, g, 16);
    const double beta = g.beta();
    for (double y : {0.0, 0.5, 2.0, 7.0})
        for (double x : {0.0, 1.0, 3.7})
            CHECK(sol.evaluate(x, y) == Approx(std::exp(-beta * y)).margin(1e-12));
    CHECK(std::abs(sol.decay_rate(0).imag()) < 1e-14);
    CHECK(sol.decay_rate(0).real() == Approx(beta).epsilon(1e-13));
}

TEST_CASE("decay rates take the principal branch") {
    for (double eps : {0.2, 0.6, 1.0})
        for (int n = 0; n < 40; ++n) {
            auto l = selfdual_decay_rate(eps, n);
            CHECK(l.real() >= 0.0);
            auto sq = l * l;
            CHECK(sq.real() == Approx(1.0 + eps * eps * (4.0 * n * n - 1.0)).margin(1e-10));
            CHECK(sq.imag() == Approx(4.0 * n * eps * eps).margin(1e-10));
        }
}

TEST_CASE("zipper trace round-trips through the Fourier solve") {
    const double eps = 0.35;
    StripGrid g = build_grid(eps, 20.0, 96, 96);
    ZipperTrace tr = make_zipper_trace(make_qa_profile(eps, 1.0));
    SelfDualSolution sol = solve_dirichlet_selfdual(tr, g);
    double worst = 0.0;
    for (int s = 0; s < 257; ++s) {
        const double x = g.ell() * s / 257.0;
        worst = std::max(worst, std::abs(sol.evaluate(x, 0.0) - tr(x)) / tr(x));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("solved field satisfies the shifted Helmholtz equation discretely") {
    const double eps = 0.5;
    // smooth low-mode trace keeps every retained boundary layer resolvable
    auto tr = [eps](double x) { return 1.0 + 0.4 * std::cos(2.0 * eps * x); };
    auto residual = [&](int s) {
        StripGrid g = build_grid(eps, 8.0, s, s);
        SelfDualSolution sol = solve_dirichlet_selfdual(tr, g, 16);
        double worst = 0.0;
        for (int j = 1; j < g.n; ++j) {
            if (g.y(j) < 1.0 || g.y(j) > 7.0) continue;  // fixed window isolates O(h^2)
            for (int i = 0; i < g.m; ++i) {
                const double x = g.x(i), y = g.y(j);
                const double c = sol.evaluate(x, y);
                const double xp = sol.evaluate(x + g.eta, y), xm = sol.evaluate(x - g.eta, y);
                const double yp = sol.evaluate(x, y + g.zeta), ym = sol.evaluate(x, y - g.zeta);
                const double lap = (xp - 2 * c + xm) / (g.eta * g.eta) +
                                   (yp - 2 * c + ym) / (g.zeta * g.zeta);
                const double dx = 0.5 * (xp - xm) / g.eta;
                worst = std::max(worst,
                                 std::abs(lap - 2 * eps * dx - (1 - eps * eps) * c));
            }
        }
        return worst;
    };
    const double r1 = residual(24), r2 = residual(48), r3 = residual(96);
    CHECK(std::log2(r1 / r2) > 1.7);
    CHECK(std::log2(r2 / r3) > 1.7);
}

TEST_CASE("large-y behavior is dominated by the zeroth mode") {
    const double eps = 0.4;
    StripGrid g = build_grid(eps, 30.0, 64, 64);
    ZipperTrace tr = make_zipper_trace(make_qa_profile(eps, 1.0));
    SelfDualSolution sol = solve_dirichlet_selfdual(tr, g);
    const double beta = g.beta();
    const double w0 = sol.mode(0).real();
    const double gap = sol.decay_rate(1).real() - beta;
    CHECK(gap > 0.0);
    for (double y : {8.0, 12.0, 18.0}) {
        double worst = 0.0;
        for (double x : {0.3, 2.0, 5.1})
            worst = std::max(worst, std::abs(sol.evaluate(x, y) - w0 * std::exp(-beta * y)));
        CHECK(worst < 3.0 * std::abs(sol.mode(1)) * std::exp(-sol.decay_rate(1).real() * y));
    }
}

TEST_CASE("nonpositive traces are rejected") {
    StripGrid g = build_grid(0.5, 10.0, 32, 24);
    auto dipping = [&](double x) { return std::cos(4 * x * g.eps) - 0.2; };
    CHECK_THROWS_AS(solve_dirichlet_selfdual(dipping, g, 16), std::invalid_argument);
}

TEST_CASE("blended test function honors the boundary structure") {
    const double eps = 0.35;
    StripGrid g = build_grid(eps, 20.0, 96, 96);
    ZipperTrace tr = make_zipper_trace(make_qa_profile(eps, 1.0));
    SelfDualSolution sol = solve_dirichlet_selfdual(tr, g);
    const double radius = 4.0 * g.zeta;
    PhaseField f = blend_test_function(sol, g, radius);
    const int k = f.config().k;

    // theta(x, 0): exactly zero on the Dirichlet part, eps x - log q_a beyond
    for (int i = 0; i < k; ++i) CHECK(f(i, 0) == 0.0);
    for (int i = k; i < g.m; ++i)
        CHECK(f(i, 0) == Approx(g.eps * g.x(i) - std::log(tr(g.x(i)))).margin(1e-12));

    // inside B(radius/2): w~ = w(x,0) cosh(y) exactly
    for (int i = k + 2; i < g.m - 2; ++i)
        CHECK(f(i, 1) ==
              Approx(g.eps * g.x(i) - std::log(tr(g.x(i)) * std::cosh(g.zeta))).margin(1e-11));

    // outside B(radius): w~ = w unchanged
    std::vector<double> w = sol.evaluate_grid(g);
    int j_far = int(std::ceil(1.5 * radius / g.zeta)) + 1;
    for (int i = 0; i < g.m; ++i)
        CHECK(f(i, j_far) ==
              Approx(g.eps * g.x(i) - std::log(w[std::size_t(j_far) * g.m + i])).margin(1e-11));

    CHECK(f.all_finite());
    CHECK_THROWS_AS(blend_test_function(sol, g, 0.0), std::invalid_argument);
}

TEST_CASE("upper bound probe stays bounded as eps shrinks") {
    ProbeParams pp;
    std::vector<ProbeRow> rows = upper_bound_probe({0.3, 0.2, 0.1}, pp);
    REQUIRE(rows.size() == 3);
    double lo = rows[0].energy.total, hi = rows[0].energy.total;
    for (const auto& r : rows) {
        CHECK(r.energy.total > 0.0);
        lo = std::min(lo, r.energy.total);
        hi = std::max(hi, r.energy.total);
    }
    CHECK(hi / lo < 3.0);
    // the knee closed form blows up over the same range
    CHECK(knee_energy(0.1) / knee_energy(0.3) > 2.9);
    CHECK_THROWS_AS(upper_bound_probe({1.5}, pp), std::invalid_argument);
}
