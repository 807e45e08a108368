#include <doctest.h>

#include "prefgrid/program.hpp"

using namespace prefgrid;

TEST_CASE("LinExpr arithmetic and evaluation") {
    LinExpr e = LinExpr::var(0, 2.0) + LinExpr::var(1, -1.0) + 3.0;
    Vector x(2);
    x << 1.5, 4.0;
    CHECK(e.evaluate(x) == doctest::Approx(2.0));
    e *= 2.0;
    CHECK(e.evaluate(x) == doctest::Approx(4.0));
    CHECK((-e).evaluate(x) == doctest::Approx(-4.0));
    CHECK(LinExpr(5.0).empty());
}

TEST_CASE("bounds compile to cone rows and equalities to A") {
    ConicProgram prog;
    const int a = prog.add_var(0.0, 1.0);
    const int b = prog.add_var();
    const int c = prog.add_var(2.0, 2.0);
    prog.add_equality(LinExpr::var(a) + LinExpr::var(b), 1.0, RowTag::Other);
    prog.add_less_equal(LinExpr::var(b), 4.0, RowTag::Other);
    prog.add_linear_cost(a, 1.0);
    prog.add_squared_cost(LinExpr::var(b) - 1.0, 0.5);
    const ConicProblem p = prog.compile();
    CHECK(p.num_vars == 3);
    CHECK(p.A.rows() == 2);  // the row plus the fixed variable
    CHECK(p.num_nonneg == 3);
    CHECK(p.soc_dims.empty());
    CHECK(prog.count(RowTag::Other) == 2);

    Vector x(3);
    x << 0.25, 0.75, 2.0;
    CHECK(prog.max_violation(x) == doctest::Approx(0.0));
    // 0.25 + 0.5 * (0.75 - 1)^2
    CHECK(prog.objective(x) == doctest::Approx(0.25 + 0.5 * 0.0625));
    CHECK(p.objective(x) == doctest::Approx(prog.objective(x)));
    (void)c;
}

TEST_CASE("rotated cone violation is measured") {
    ConicProgram prog;
    const int p = prog.add_var();
    const int v = prog.add_var(0.0, kInf);
    const int l = prog.add_var(0.0, kInf);
    prog.add_rotated_soc(LinExpr::var(v), LinExpr::var(l), {LinExpr::var(p)});
    Vector x(3);
    x << 1.0, 1.0, 1.0;
    CHECK(prog.max_violation(x) == doctest::Approx(0.0).epsilon(1e-12));
    x << 2.0, 1.0, 1.0;
    CHECK(prog.max_violation(x) > 0.1);
}
