#include <cmath>
#include <string>

#include <doctest.h>

#include "prefgrid/reference_solver.hpp"
#include "unit/toy_oracle.hpp"

using namespace prefgrid;

namespace {

const std::string kData = PREFGRID_TEST_DATA;

double edge_flow(const CentralizedResult& r) {
    for (const auto& e : r.model.blocks[0].edges)
        if (e.parent) return r.solve.x[e.p[0]];
    return NAN;
}

}  // namespace

TEST_CASE("idle microgrid costs nothing") {
    const Scenario s = load_scenario(R"({
      "horizon": 1, "mode": "island",
      "microgrids": [{"buses": [0, 1], "lines": [{"from": 0, "to": 1, "r": 0.01, "x": 0.01}],
                      "generators": [{"bus": 0}], "storages": [{"bus": 1}],
                      "net_load": {"inline": [{"bus": 1, "p": 0.0, "q": 0.0}]}}],
      "preferences": [[1.0]], "kappa": {"fixed": 60}
    })");
    const auto r = solve_centralized(s);
    REQUIRE(r.solve.status == SolveStatus::Optimal);
    CHECK(std::abs(r.objective) <= 1e-7);
    CHECK(std::abs(r.solve.x[r.model.blocks[0].devices.p_gen[0][0]]) <= 1e-7);
}

TEST_CASE("two-microgrid toy matches exhaustive search") {
    const Scenario s = load_scenario_file(kData + "/two_mg.json");
    const auto r = solve_centralized(s);
    REQUIRE(r.solve.status == SolveStatus::Optimal);
    const toy::Point best = toy::search();
    REQUIRE(std::isfinite(best.cost));
    CHECK(best.tau > 0.05);
    CHECK(std::abs(edge_flow(r) - best.tau) <= 1e-3);
    CHECK(std::abs(r.objective - best.cost) <= 1e-3);
    CHECK(std::abs(r.solve.x[r.model.blocks[0].devices.p_gen[0][0]] - best.gen0) <= 1e-3);
    CHECK(std::abs(r.solve.x[r.model.blocks[1].devices.p_gen[0][0]] - best.gen1) <= 1e-3);
    // Trades are the mirror images of each other.
    const auto& t0 = r.model.blocks[0].trades.at(0);
    const auto& t1 = r.model.blocks[1].trades.at(0);
    CHECK(std::abs(r.solve.x[t0.p[0]] + r.solve.x[t1.p[0]]) <= 1e-8);
}

TEST_CASE("objective equals the sum of per-microgrid terms") {
    const Scenario s = build_ieee33_case(PreferenceCase::Case1, Mode::GridConnected, KappaSpec::fixed(60));
    const auto r = solve_centralized(s);
    REQUIRE(r.solve.status == SolveStatus::Optimal);
    ObjectiveBreakdown sum;
    for (const auto& p : r.per_mg) sum += p;
    CHECK(std::abs(sum.total() - r.objective) <= 1e-8 * std::max(1.0, std::abs(r.objective)));
    CHECK(r.model.blocks.size() == 8);
    CHECK(r.model.program.max_violation(r.solve.x) <= 1e-7);
    const KktReport k = kkt_report(r.model.program.compile(), r.solve);
    CHECK(k.stationarity <= 1e-6);
    CHECK(k.equality_residual <= 1e-7);

    // DSO stays idle when peers are preferred.
    for (std::size_t h = 0; h < 24; ++h) CHECK(std::abs(r.solve.x[r.model.blocks[0].grid_p[h]]) <= 1e-3);
}

TEST_CASE("centralized solution sliced per microgrid satisfies each local program") {
    const Scenario s = build_ieee33_case(PreferenceCase::Case2, Mode::Islanding, KappaSpec::fixed(60));
    const auto r = solve_centralized(s);
    REQUIRE(r.solve.status == SolveStatus::Optimal);
    // Blocks are appended one after another in microgrid order.
    int offset = 0;
    for (int n = 0; n < s.size(); ++n) {
        const LocalProgram lp = build_local_program(n, s);
        Vector local(lp.program.num_vars());
        for (int i = 0; i < lp.program.num_vars(); ++i) local[i] = r.solve.x[offset + i];
        CHECK(lp.program.max_violation(local) <= 1e-7);
        offset += lp.program.num_vars();
    }
    CHECK(offset == r.model.program.num_vars());
}

TEST_CASE("infeasible scenario names the short microgrid") {
    const Scenario s = load_scenario_file(kData + "/infeasible.json");
    const auto r = solve_centralized(s);
    CHECK(r.solve.status == SolveStatus::Infeasible);
    CHECK(r.hint.find("0") != std::string::npos);
}
