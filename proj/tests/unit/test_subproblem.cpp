#include <cmath>

#include <doctest.h>

#include "prefgrid/subproblem.hpp"

using namespace prefgrid;

namespace {

const char* kSingle = R"({
  "horizon": 1, "mode": "island",
  "microgrids": [{"buses": [0, 1], "lines": [{"from": 0, "to": 1, "r": 0.01, "x": 0.01}],
                  "generators": [{"bus": 0}],
                  "net_load": {"inline": [{"bus": 1, "p": 0.1, "q": 0.02}]}}],
  "preferences": [[1.0]], "kappa": {"fixed": 60}
})";

}  // namespace

TEST_CASE("single islanded microgrid reduces to economic dispatch") {
    const Scenario s = load_scenario(kSingle);
    LocalProgram lp = build_local_program(0, s);
    CHECK(lp.vars.trades.empty());
    CHECK_FALSE(lp.vars.dso.has_value());
    CHECK(lp.shared.empty());

    // Generator serves the load plus the line loss; l from the two-bus quadratic.
    const double R = 0.01, X = 0.01, P = 0.1, Q = 0.02;
    const double a = R * R + X * X, b = 2 * (P * R + Q * X) - 1.0, c = P * P + Q * Q;
    const double l = (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
    const double gen = P + R * l;
    const double expected = 0.5 * 0.36 * gen * gen + 40.0 * gen + 60.0 * R * l;

    const auto r = solve_conic(lp);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[lp.vars.devices.p_gen[0][0]] == doctest::Approx(gen).epsilon(1e-7));
    CHECK(r.objective == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("grid-connected MG0 trades with seven peers and the DSO") {
    const Scenario s = build_ieee33_case(PreferenceCase::Case0, Mode::GridConnected, KappaSpec::fixed(60));
    const LocalProgram lp = build_local_program(0, s);
    CHECK(lp.vars.trades.size() == 7);
    REQUIRE(lp.vars.dso.has_value());
    CHECK(lp.program.count(RowTag::TradeSplit) == 8u * 2u * 24u);
    for (const auto& t : lp.vars.trades) {
        CHECK(t.p_plus.size() == 24);
        CHECK(t.p_minus.size() == 24);
        CHECK(t.q_plus.size() == 24);
        CHECK(t.q_minus.size() == 24);
    }
}

TEST_CASE("islanded programs carry no DSO variables") {
    const Scenario s = build_ieee33_case(PreferenceCase::Case1, Mode::Islanding, KappaSpec::fixed(60));
    for (int n = 0; n < s.size(); ++n) {
        const LocalProgram lp = build_local_program(n, s);
        CHECK_FALSE(lp.vars.dso.has_value());
        CHECK(lp.vars.grid_p.empty());
        for (const auto& t : lp.vars.trades) CHECK(t.partner >= 0);
        for (const auto& sh : lp.shared) CHECK((sh.kind != SharedKind::TradeP || sh.partner >= 0));
    }
}

TEST_CASE("solved local program: decomposition, balance and complementarity") {
    const Scenario s = build_ieee33_case(PreferenceCase::Case1, Mode::GridConnected, KappaSpec::fixed(60));
    const LocalProgram lp = build_local_program(0, s, HourRange{0, 6});
    const auto r = solve_conic(lp);
    REQUIRE(r.status == SolveStatus::Optimal);

    const ObjectiveBreakdown parts = objective_breakdown(s, lp.vars, r.x);
    CHECK(std::abs(parts.total() - lp.program.objective(r.x)) <= 1e-10 * std::max(1.0, std::abs(parts.total())));
    CHECK(balance_residual(lp.program, r.x) <= 1e-7);
    CHECK(lp.program.max_violation(r.x) <= 1e-7);

    for (const auto& t : lp.vars.trades)
        for (std::size_t h = 0; h < t.p.size(); ++h) CHECK(std::min(r.x[t.p_plus[h]], r.x[t.p_minus[h]]) <= 1e-8);
    for (std::size_t k = 0; k < lp.vars.devices.p_char.size(); ++k)
        for (std::size_t h = 0; h < lp.vars.devices.p_char[k].size(); ++h)
            CHECK(std::min(r.x[lp.vars.devices.p_char[k][h]], r.x[lp.vars.devices.p_disc[k][h]]) <= 1e-8);

    SUBCASE("penalty vanishes at the target") {
        AdmmTerms terms;
        terms.rho = 10.0;
        for (std::size_t i = 0; i < lp.shared.size(); ++i) {
            terms.dual.push_back(0.01 * static_cast<double>(i % 7) - 0.03);
            terms.target.push_back(r.x[lp.shared[i].var] + terms.dual.back());
        }
        const LocalProgram aug = build_local_program(0, s, HourRange{0, 6}, terms);
        CHECK(aug.program.objective(r.x) == doctest::Approx(lp.program.objective(r.x)).epsilon(1e-12));
        Vector moved = r.x;
        moved[lp.shared[0].var] += 0.1;
        CHECK(aug.program.objective(moved) > lp.program.objective(moved));
    }
}

TEST_CASE("hour ranges are checked") {
    const Scenario s = build_ieee33_case(PreferenceCase::Case0, Mode::Islanding, KappaSpec::fixed(60));
    CHECK_THROWS_AS(build_local_program(0, s, HourRange{5, 3}), DomainError);
    CHECK_THROWS_AS(build_local_program(0, s, HourRange{0, 30}), DomainError);
    CHECK_THROWS_AS(build_local_program(9, s), DomainError);
    CHECK(build_local_program(2, s, HourRange{4, 8}).vars.hours == 4);
}

TEST_CASE("reference voltage buses") {
    const auto grid = reference_buses(build_ieee33_case(PreferenceCase::Case0, Mode::GridConnected, KappaSpec::fixed(60)));
    CHECK(grid == std::vector<int>{0});
    const auto island = reference_buses(build_ieee33_case(PreferenceCase::Case0, Mode::Islanding, KappaSpec::fixed(60)));
    CHECK(island == std::vector<int>{0});
}
