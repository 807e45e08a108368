#include <cmath>

#include <doctest.h>

#include "prefgrid/conic_solver.hpp"
#include "prefgrid/distflow.hpp"

using namespace prefgrid;

namespace {

FlowNetwork two_bus(double r, double x) {
    FlowNetwork net;
    net.slots = {{0, 1.0, 1.0, false}, {1, 0.81, 1.21, false}};
    FlowLine line;
    line.from = 0;
    line.to = 1;
    line.r = r;
    line.x = x;
    line.p_min = line.q_min = -10;
    line.p_max = line.q_max = 10;
    line.l_max = 100;
    net.lines = {line};
    return net;
}

struct Built {
    ConicProgram prog;
    BranchFlowVars vars;
    int gen_p = 0;
    int gen_q = 0;
};

// Free generation at slot 0, fixed load at slot 1.
Built build(const FlowNetwork& net, double load_p, double load_q) {
    Built b;
    b.gen_p = b.prog.add_var();
    b.gen_q = b.prog.add_var();
    std::vector<std::vector<LinExpr>> p = {{LinExpr::var(b.gen_p)}, {LinExpr(-load_p)}};
    std::vector<std::vector<LinExpr>> q = {{LinExpr::var(b.gen_q)}, {LinExpr(-load_q)}};
    b.vars = distflow_constraints(b.prog, net, p, q, 1);
    soc_relaxation(b.prog, net, b.vars);
    return b;
}

}  // namespace

TEST_CASE("lossless line at flat voltage") {
    const FlowNetwork net = two_bus(0.0, 0.0);
    Built b = build(net, 0.0, 0.0);
    Vector x = Vector::Zero(b.prog.num_vars());
    x[b.vars.v[0][0]] = 1.0;
    x[b.vars.v[1][0]] = 1.0;
    CHECK(b.prog.max_violation(x) == 0.0);

    b.prog.add_linear_cost(b.gen_p, 1.0);
    const auto r = solve_conic(b.prog.compile());
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[b.vars.v[1][0]] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(r.x[b.vars.p[0][0]]) <= 1e-7);
}

TEST_CASE("two-bus line matches the closed-form solution") {
    const double R = 0.1, X = 0.1, load = 0.1;
    // l = ((load + R l)^2 + (X l)^2) / 1, a quadratic in l; take the small root.
    const double a = R * R + X * X, bq = 2 * load * R - 1.0, c = load * load;
    const double l = (-bq - std::sqrt(bq * bq - 4 * a * c)) / (2 * a);
    const double P = load + R * l, Q = X * l;
    const double vj = 1.0 - 2 * (R * P + X * Q) + (R * R + X * X) * l;

    const FlowNetwork net = two_bus(R, X);
    Built b = build(net, load, 0.0);
    b.prog.add_linear_cost(b.gen_p, 1.0);
    const auto r = solve_conic(b.prog.compile());
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[b.vars.l[0][0]] == doctest::Approx(l).epsilon(1e-6));
    CHECK(r.x[b.vars.p[0][0]] == doctest::Approx(P).epsilon(1e-7));
    CHECK(r.x[b.vars.q[0][0]] == doctest::Approx(Q).epsilon(1e-6));
    CHECK(r.x[b.vars.v[1][0]] == doctest::Approx(vj).epsilon(1e-7));
    CHECK(b.prog.max_violation(r.x) <= 1e-7);
    CHECK(check_exactness(net, b.vars, r.x).max_gap <= 1e-5);
}

TEST_CASE("cone needs l >= 25 for P=3, Q=4, v=1") {
    const FlowNetwork net = two_bus(0.0, 0.0);
    ConicProgram prog;
    std::vector<std::vector<LinExpr>> zero = {{LinExpr()}, {LinExpr()}};
    const BranchFlowVars vars = distflow_constraints(prog, net, zero, zero, 1);
    soc_relaxation(prog, net, vars);
    Vector x = Vector::Zero(prog.num_vars());
    x[vars.v[0][0]] = 1.0;
    x[vars.p[0][0]] = 3.0;
    x[vars.q[0][0]] = 4.0;
    x[vars.l[0][0]] = 25.0;
    CHECK(prog.cones().size() == 1);
    const auto cone_violation = [&] {
        double worst = 0.0;
        for (const auto& c : prog.cones()) {
            double n2 = 0.0;
            for (const auto& w : c.w) n2 += w.evaluate(x) * w.evaluate(x);
            worst = std::max(worst, std::sqrt(n2) - c.t.evaluate(x));
        }
        return worst;
    };
    CHECK(cone_violation() <= 1e-12);
    x[vars.l[0][0]] = 24.9;
    CHECK(cone_violation() > 0.0);
    x[vars.p[0][0]] = 0.0;
    x[vars.q[0][0]] = 0.0;
    x[vars.l[0][0]] = 0.0;
    CHECK(cone_violation() <= 0.0);
}

TEST_CASE("exactness gap") {
    const FlowNetwork net = two_bus(0.1, 0.1);
    ConicProgram prog;
    std::vector<std::vector<LinExpr>> zero = {{LinExpr()}, {LinExpr()}};
    const BranchFlowVars vars = distflow_constraints(prog, net, zero, zero, 1);
    Vector x = Vector::Zero(prog.num_vars());
    x[vars.v[0][0]] = 1.0;
    x[vars.p[0][0]] = 3.0;
    x[vars.q[0][0]] = 4.0;
    x[vars.l[0][0]] = 25.0;
    CHECK(check_exactness(net, vars, x).max_gap == 0.0);
    CHECK(check_exactness(net, vars, x).flagged.empty());
    x[vars.l[0][0]] = 27.5;
    const auto rep = check_exactness(net, vars, x);
    CHECK(rep.max_gap == doctest::Approx(2.5 / 27.5).epsilon(1e-12));
    REQUIRE(rep.flagged.size() == 1);
    CHECK(rep.flagged[0].line == 0);
    CHECK(cone_gap(3, 4, 1, 27.5) == doctest::Approx(0.0909).epsilon(1e-3));
}

TEST_CASE("line loss cost") {
    FlowNetwork net = two_bus(0.1, 0.0);
    ConicProgram prog;
    std::vector<std::vector<LinExpr>> zero = {{LinExpr()}, {LinExpr()}};
    const BranchFlowVars vars = distflow_constraints(prog, net, zero, zero, 1);
    Vector x = Vector::Zero(prog.num_vars());
    CHECK(line_loss_cost(net, vars, x, {50.0})[0] == 0.0);
    x[vars.l[0][0]] = 0.2;
    CHECK(line_loss_cost(net, vars, x, {50.0})[0] == doctest::Approx(1.0).epsilon(1e-14));
    net.lines[0].loss_share = 0.5;
    CHECK(line_loss_cost(net, vars, x, {50.0})[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("cyclic line sets are rejected") {
    FlowNetwork net;
    net.slots = {{0}, {1}, {2}};
    net.lines = {{0, 1}, {1, 2}, {2, 0}};
    CHECK_THROWS_AS(check_radial(net), StructureError);
    ConicProgram prog;
    std::vector<std::vector<LinExpr>> zero(3, {LinExpr()});
    CHECK_THROWS_AS(distflow_constraints(prog, net, zero, zero, 1), StructureError);
    net.lines.pop_back();
    CHECK_NOTHROW(check_radial(net));
}

TEST_CASE("balance rows sum to total losses") {
    // Injections minus load equal R l once the balance rows hold.
    const FlowNetwork net = two_bus(0.05, 0.02);
    Built b = build(net, 0.4, 0.1);
    b.prog.add_linear_cost(b.gen_p, 1.0);
    const auto r = solve_conic(b.prog.compile());
    REQUIRE(r.status == SolveStatus::Optimal);
    const double loss = 0.05 * r.x[b.vars.l[0][0]];
    CHECK(std::abs(r.x[b.gen_p] - 0.4 - loss) <= 1e-7);
}
