#include <cmath>
#include <random>

#include <doctest.h>

#include "prefgrid/conic_solver.hpp"

using namespace prefgrid;

TEST_CASE("min x^2 subject to x >= 1") {
    ConicProgram prog;
    const int x = prog.add_var(1.0, kInf);
    prog.add_squared_cost(LinExpr::var(x), 1.0);
    const auto r = solve_conic(prog.compile());
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[x] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("linear objective stops on the cone boundary") {
    ConicProgram prog;
    const int p = prog.add_var(-2.0, kInf);
    const int q = prog.add_var(0.0, 0.0);
    const int v = prog.add_var(1.0, 1.0);
    const int l = prog.add_var(1.0, 1.0);
    prog.add_linear_cost(p, 1.0);
    prog.add_rotated_soc(LinExpr::var(v), LinExpr::var(l), {LinExpr::var(p), LinExpr::var(q)});
    const auto r = solve_conic(prog.compile());
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[p] == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(prog.max_violation(r.x) < 1e-7);
}

TEST_CASE("contradictory bounds are reported infeasible") {
    ConicProgram prog;
    const int x = prog.add_var(1.0, kInf);
    prog.add_less_equal(LinExpr::var(x), 0.0, RowTag::Other);
    prog.add_linear_cost(x, 1.0);
    CHECK(solve_conic(prog.compile()).status == SolveStatus::Infeasible);
}

namespace {

struct Instance {
    double p11, p12, p22, q1, q2;  // 0.5 x'Px + q'x
    double a1, a2, b;              // a'x <= b
    double c1, c2, radius;         // ||x - c|| <= radius
    double f(double x, double y) const {
        return 0.5 * (p11 * x * x + 2 * p12 * x * y + p22 * y * y) + q1 * x + q2 * y;
    }
    bool feasible(double x, double y) const {
        return std::abs(x) <= 1 && std::abs(y) <= 1 && a1 * x + a2 * y <= b &&
               std::hypot(x - c1, y - c2) <= radius;
    }
};

double grid_min(const Instance& in) {
    double best = INFINITY, bx = 0, by = 0;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) {
            const double x = -1 + i * 0.005, y = -1 + j * 0.005;
            if (in.feasible(x, y) && in.f(x, y) < best) best = in.f(x, y), bx = x, by = y;
        }
    const double cx = bx, cy = by;
    for (int i = -200; i <= 200; ++i)
        for (int j = -200; j <= 200; ++j) {
            const double x = cx + i * 5e-5, y = cy + j * 5e-5;
            if (in.feasible(x, y) && in.f(x, y) < best) best = in.f(x, y);
        }
    return best;
}

}  // namespace

TEST_CASE("random small programs agree with a dense grid search") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        Instance in{};
        const double m11 = u(rng), m12 = u(rng), m21 = u(rng), m22 = u(rng);
        in.p11 = m11 * m11 + m21 * m21;
        in.p12 = m11 * m12 + m21 * m22;
        in.p22 = m12 * m12 + m22 * m22;
        in.q1 = 2 * u(rng);
        in.q2 = 2 * u(rng);
        in.a1 = u(rng);
        in.a2 = u(rng);
        in.b = 0.2 + 0.5 * (u(rng) + 1);
        in.c1 = 0.3 * u(rng);
        in.c2 = 0.3 * u(rng);
        in.radius = std::hypot(in.c1, in.c2) + 0.3 + 0.3 * (u(rng) + 1);

        ConicProgram prog;
        const int x = prog.add_var(-1.0, 1.0);
        const int y = prog.add_var(-1.0, 1.0);
        const int r = prog.add_var(in.radius, in.radius);
        prog.add_squared_cost(LinExpr::var(x, m11) + LinExpr::var(y, m12), 0.5);
        prog.add_squared_cost(LinExpr::var(x, m21) + LinExpr::var(y, m22), 0.5);
        prog.add_linear_cost(x, in.q1);
        prog.add_linear_cost(y, in.q2);
        prog.add_less_equal(LinExpr::var(x, in.a1) + LinExpr::var(y, in.a2), in.b, RowTag::Other);
        prog.add_soc(LinExpr::var(r), {LinExpr::var(x) - in.c1, LinExpr::var(y) - in.c2});
        const auto res = solve_conic(prog.compile());
        REQUIRE(res.status == SolveStatus::Optimal);
        const double oracle = grid_min(in);
        CHECK(res.objective <= oracle + 1e-7);
        CHECK(std::abs(res.objective - oracle) <= 1e-3);
    }
}

TEST_CASE("kkt report of an analytic equality QP") {
    // min 0.5 (x^2 + y^2) - x - 2y  s.t.  x + y = 1  ->  x = 0, y = 1, multiplier 1
    ConicProgram prog;
    const int x = prog.add_var();
    const int y = prog.add_var();
    prog.add_squared_cost(LinExpr::var(x), 0.5);
    prog.add_squared_cost(LinExpr::var(y), 0.5);
    prog.add_linear_cost(x, -1.0);
    prog.add_linear_cost(y, -2.0);
    prog.add_equality(LinExpr::var(x) + LinExpr::var(y), 1.0, RowTag::Other);
    const ConicProblem problem = prog.compile();

    SolveResult exact;
    exact.status = SolveStatus::Optimal;
    exact.x = Vector::Zero(2);
    exact.x[y] = 1.0;
    exact.y = Vector::Constant(1, 1.0);
    exact.z = Vector::Zero(0);
    exact.s = Vector::Zero(0);
    exact.objective = problem.objective(exact.x);
    const KktReport ok = kkt_report(problem, exact);
    CHECK(ok.equality_residual <= 1e-10);
    CHECK(ok.stationarity <= 1e-10);
    CHECK(ok.complementarity <= 1e-10);

    SolveResult bumped = exact;
    bumped.x[x] += 1e-3;
    CHECK(kkt_report(problem, bumped).stationarity > 1e-5);

    const auto solved = solve_conic(problem);
    REQUIRE(solved.status == SolveStatus::Optimal);
    CHECK(solved.x[x] == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(solved.x[y] == doctest::Approx(1.0).epsilon(1e-8));
    const KktReport rep = kkt_report(problem, solved);
    CHECK(rep.stationarity <= 1e-6);
    CHECK(rep.equality_residual <= 1e-7);
}

TEST_CASE("solver reuse with a new linear cost and diagonal shift") {
    ConicProgram prog;
    const int x = prog.add_var(-5.0, 5.0);
    prog.add_squared_cost(LinExpr::var(x), 0.5);
    ConicSolver solver(prog.compile());
    auto r = solver.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[x] == doctest::Approx(0.0).epsilon(1e-8));

    // 0.5 (1 + 1) x^2 - 4x  ->  x = 2
    solver.set_linear_cost(Vector::Constant(1, -4.0));
    solver.set_diagonal_shift(Vector::Constant(1, 1.0));
    r = solver.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[x] == doctest::Approx(2.0).epsilon(1e-7));
}
