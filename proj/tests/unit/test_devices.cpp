#include <algorithm>
#include <random>

#include <doctest.h>

#include "prefgrid/conic_solver.hpp"
#include "prefgrid/devices.hpp"

using namespace prefgrid;

TEST_CASE("fg_cost examples") {
    FuelGenerator g;
    g.a = 2.0;
    g.b = 3.0;
    g.c = 1.0;
    g.p_max = 1.0;
    CHECK(fg_cost(g, 0.0) == 1.0);
    CHECK(fg_cost(g, 0.5) == 3.0);
    CHECK_THROWS_AS(fg_cost(g, 1.5), DomainError);
    CHECK_THROWS_AS(fg_cost(g, -0.1), DomainError);
}

TEST_CASE("fg_cost is nondecreasing and convex on its range") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        FuelGenerator g;
        g.a = 2 * u(rng);
        g.b = 50 * u(rng);
        g.c = 5 * u(rng);
        g.p_max = 0.1 + u(rng);
        double prev = fg_cost(g, 0.0);
        for (int i = 1; i <= 100; ++i) {
            const double c = fg_cost(g, std::min(g.p_max, g.p_max * i / 100.0));
            CHECK(c >= prev);
            prev = c;
        }
        const double p1 = g.p_max * u(rng), p2 = g.p_max * u(rng), t = u(rng);
        CHECK(fg_cost(g, t * p1 + (1 - t) * p2) <= t * fg_cost(g, p1) + (1 - t) * fg_cost(g, p2) + 1e-12);
    }
}

TEST_CASE("storage_step examples") {
    StorageUnit s;
    s.eta_char = 0.9;
    s.eta_disc = 0.9;
    CHECK(storage_step(s, 0.1, 0.1, 0.0) == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(storage_step(s, 0.1, 0.0, 0.0) == 0.1);
    CHECK(storage_step(s, 0.1, 0.05, 0.05) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_AS(storage_step(s, 0.1, -0.01, 0.0), DomainError);
    CHECK_THROWS_AS(storage_step(s, 0.1, 0.0, -0.01), DomainError);
}

TEST_CASE("storage_step is affine in the powers") {
    StorageUnit s;
    s.eta_char = 0.85;
    s.eta_disc = 0.95;
    for (double alpha : {0.0, 0.5, 2.0, 3.7}) {
        const double base = storage_step(s, 0.1, 0.03, 0.02) - 0.1;
        CHECK(storage_step(s, 0.1, alpha * 0.03, alpha * 0.02) - 0.1 == doctest::Approx(alpha * base).epsilon(1e-12));
    }
}

TEST_CASE("device constraint counts") {
    {
        ConicProgram prog;
        device_constraints(prog, {FuelGenerator{}}, {}, 2);
        CHECK(prog.count(RowTag::GeneratorRamp) == 2);  // one up/down pair
    }
    {
        ConicProgram prog;
        device_constraints(prog, {}, {StorageUnit{}, StorageUnit{}}, 24);
        CHECK(prog.count(RowTag::StorageDynamics) + prog.count(RowTag::StorageInitial) == 48);
    }
}

TEST_CASE("device fragments hold at a solved dispatch") {
    // Two hours, demand 0.25 then 0.05 MW served by one generator and one storage.
    ConicProgram prog;
    FuelGenerator g;
    g.ramp = 0.1;
    StorageUnit s;
    const auto vars = device_constraints(prog, {g}, {s}, 2);
    add_generation_cost(prog, {g}, vars);
    const double demand[2] = {0.25, 0.05};
    for (int t = 0; t < 2; ++t) {
        const auto h = static_cast<std::size_t>(t);
        prog.add_equality(LinExpr::var(vars.p_gen[0][h]) + LinExpr::var(vars.p_disc[0][h]) -
                              LinExpr::var(vars.p_char[0][h]),
                          demand[t], RowTag::ActiveBalance);
        prog.add_linear_cost(vars.p_char[0][h], 1.0);
        prog.add_linear_cost(vars.p_disc[0][h], 1.0);
    }
    const auto r = solve_conic(prog.compile());
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(prog.max_violation(r.x) <= 1e-7);
    for (int t = 0; t < 2; ++t) {
        const auto h = static_cast<std::size_t>(t);
        CHECK(std::min(r.x[vars.p_char[0][h]], r.x[vars.p_disc[0][h]]) <= 1e-8);
    }
    CHECK(std::abs(r.x[vars.p_gen[0][1]] - r.x[vars.p_gen[0][0]]) <= 0.1 + 1e-7);
    const double x1 = storage_step(s, s.x0, r.x[vars.p_char[0][0]], r.x[vars.p_disc[0][0]]);
    CHECK(r.x[vars.soc[0][0]] == doctest::Approx(x1).epsilon(1e-7));
}
