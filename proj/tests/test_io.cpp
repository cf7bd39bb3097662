#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "rcn/field_io.hpp"
#include "rcn/grid.hpp"

using namespace rcn;

TEST_CASE("field files round-trip bit-exactly") {
    StripGrid g = build_grid(0.37, 13.5, 16, 12);
    PhaseField f(g, BoundaryConfig{5, -0.12345678901234567});
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> U(-10.0, 10.0);
    for (double& v : f.values()) v = U(rng);

    std::stringstream ss;
    write_field(ss, f);
    PhaseField back = read_field(ss);

    CHECK(back.grid().m == g.m);
    CHECK(back.grid().n == g.n);
    CHECK(back.grid().eps == g.eps);
    CHECK(back.grid().L == g.L);
    CHECK(back.config().k == f.config().k);
    CHECK(back.config().delta == f.config().delta);
    for (int j = 0; j <= g.n; ++j)
        for (int i = 0; i < g.m; ++i) CHECK(back(i, j) == f(i, j));

    // writing the reread field reproduces the bytes
    std::stringstream ss2;
    write_field(ss2, back);
    std::stringstream ss3;
    write_field(ss3, f);
    CHECK(ss2.str() == ss3.str());
}

TEST_CASE("malformed field files are rejected") {
    {
        std::stringstream ss("not-a-field 4 4 0.5 10 0 0\n");
        CHECK_THROWS_AS(read_field(ss), std::runtime_error);
    }
    {
        std::stringstream ss("rcn-field 16 12 0.5 10 0 0\n1 2 3\n");
        CHECK_THROWS_AS(read_field(ss), std::runtime_error);
    }
    {
        // header with invalid grid parameters
        std::stringstream ss("rcn-field 16 12 1.7 10 0 0\n");
        CHECK_THROWS_AS(read_field(ss), std::invalid_argument);
    }
    CHECK_THROWS_AS(read_field(std::string("/nonexistent/path/x.field")), std::runtime_error);
}
