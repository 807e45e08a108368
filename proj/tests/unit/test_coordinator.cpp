#include <cmath>
#include <set>
#include <string>

#include <doctest.h>

#include "prefgrid/coordinator.hpp"
#include "prefgrid/reference_solver.hpp"

using namespace prefgrid;

namespace {

const std::string kData = PREFGRID_TEST_DATA;

AgentMessage message(int sender, std::initializer_list<double> values) {
    AgentMessage m;
    m.sender = sender;
    for (double v : values) m.entries.push_back({SharedKind::TradeP, 1 - sender, -1, 0, v});
    return m;
}

}  // namespace

TEST_CASE("consensus update examples") {
    CHECK(consensus_update(0.5, -0.5, true) == 0.5);
    CHECK(consensus_update(0.6, -0.4, true) == doctest::Approx(0.5).epsilon(1e-15));
    for (double y : {1.0, 0.0, 1.0, 0.98}) CHECK(consensus_update(y, y, false) == y);
    CHECK(consensus_update(1.0, 0.98, false) == doctest::Approx(0.99).epsilon(1e-15));
}

TEST_CASE("residuals on a hand-built state") {
    const std::vector<CouplingPair> pairs = {{0, 0, 1, 0, true}, {0, 1, 1, 1, false}};
    const std::vector<AgentMessage> msgs = {message(0, {0.6, 1.0}), message(1, {-0.4, 0.97})};
    const auto r = residuals(pairs, msgs, {0.5, 0.985}, {0.45, 0.985}, 10.0);
    CHECK(r.primal == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.dual == doctest::Approx(0.5).epsilon(1e-12));

    const std::vector<AgentMessage> zeros = {message(0, {0.0, 0.0}), message(1, {0.0, 0.0})};
    const auto z = residuals(pairs, zeros, {0.0, 0.0}, {0.0, 0.0}, 10.0);
    CHECK(z.primal == 0.0);
    CHECK(z.dual == 0.0);
}

TEST_CASE("single islanded microgrid needs one iteration") {
    const Scenario s = load_scenario(R"({
      "horizon": 1, "mode": "island",
      "microgrids": [{"buses": [0, 1], "lines": [{"from": 0, "to": 1, "r": 0.01, "x": 0.01}],
                      "generators": [{"bus": 0}],
                      "net_load": {"inline": [{"bus": 1, "p": 0.1, "q": 0.02}]}}],
      "preferences": [[1.0]], "kappa": {"fixed": 60}
    })");
    const auto a = run_admm(s);
    CHECK(a.converged);
    CHECK(a.iterations == 1);
    const auto c = solve_centralized(s);
    CHECK(a.objective == doctest::Approx(c.objective).epsilon(1e-8));
}

TEST_CASE("two-microgrid toy agrees with the centralized solve") {
    const Scenario s = load_scenario_file(kData + "/two_mg.json");
    const auto c = solve_centralized(s);
    REQUIRE(c.solve.status == SolveStatus::Optimal);
    AdmmParams params;
    params.threads = 2;
    const auto a = run_admm(s, params);
    REQUIRE(a.converged);
    CHECK(std::abs(a.objective - c.objective) / std::abs(c.objective) <= 1e-3);
    const double admm_trade = a.x[0][a.locals[0].vars.trades[0].p[0]];
    const double central_trade = c.solve.x[c.model.blocks[0].trades[0].p[0]];
    CHECK(std::abs(admm_trade - central_trade) <= 1e-3);
    const auto& last = a.state.history.back();
    CHECK(last.primal <= params.eps_primal);
    CHECK(last.dual <= params.eps_dual);
    for (std::size_t k = 1; k < a.state.history.size(); ++k)
        CHECK(a.state.history[k].iteration == a.state.history[k - 1].iteration + 1);
}

TEST_CASE("residual trace is reproducible across runs and thread counts") {
    const Scenario s = load_scenario_file(kData + "/two_mg.json");
    AdmmParams one;
    one.threads = 1;
    AdmmParams many;
    many.threads = 3;
    const auto a = run_admm(s, one);
    const auto b = run_admm(s, one);
    const auto c = run_admm(s, many);
    REQUIRE(a.state.history.size() == b.state.history.size());
    REQUIRE(a.state.history.size() == c.state.history.size());
    for (std::size_t k = 0; k < a.state.history.size(); ++k) {
        CHECK(a.state.history[k].primal == b.state.history[k].primal);
        CHECK(a.state.history[k].dual == b.state.history[k].dual);
        CHECK(a.state.history[k].primal == c.state.history[k].primal);
        CHECK(a.state.history[k].objective == c.state.history[k].objective);
    }
}

TEST_CASE("exchanged quantities are trades and boundary-line physics only") {
    const Scenario s = build_ieee33_case(PreferenceCase::Case0, Mode::GridConnected, KappaSpec::fixed(60));
    for (int n = 0; n < s.size(); ++n) {
        const LocalProgram lp = build_local_program(n, s, HourRange{0, 2});
        std::set<int> allowed;
        for (const auto& t : lp.vars.trades) {
            allowed.insert(t.p.begin(), t.p.end());
            allowed.insert(t.q.begin(), t.q.end());
        }
        for (const auto& e : lp.vars.edges)
            for (const auto* v : {&e.p, &e.q, &e.v_from, &e.v_to}) allowed.insert(v->begin(), v->end());
        std::set<int> device;
        for (const auto* group : {&lp.vars.devices.p_gen, &lp.vars.devices.q_gen, &lp.vars.devices.p_char,
                                  &lp.vars.devices.p_disc, &lp.vars.devices.soc})
            for (const auto& d : *group) device.insert(d.begin(), d.end());
        for (const auto& sh : lp.shared) {
            CHECK(allowed.count(sh.var) == 1);
            CHECK(device.count(sh.var) == 0);
        }
        for (const auto& sh : lp.shared)
            if (sh.kind == SharedKind::TradeP || sh.kind == SharedKind::TradeQ) CHECK(sh.partner >= 0);
    }
}

TEST_CASE("unmatched shared quantities are rejected") {
    const Scenario s = load_scenario_file(kData + "/two_mg.json");
    std::vector<std::vector<SharedSlot>> shared = {build_local_program(0, s).shared, {}};
    CHECK_THROWS_AS(pair_shared(s, shared), StructureError);
}

TEST_CASE("local infeasibility aborts with the agent id") {
    const Scenario s = load_scenario_file(kData + "/infeasible.json");
    try {
        run_admm(s);
        FAIL("expected LocalSolveError");
    } catch (const LocalSolveError& e) {
        CHECK(e.agent() == 0);
        CHECK(e.iteration() == 1);
    }
}
