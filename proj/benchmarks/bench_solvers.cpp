#include <benchmark/benchmark.h>

#include "prefgrid/coordinator.hpp"
#include "prefgrid/reference_solver.hpp"

using namespace prefgrid;

namespace {

const Scenario& case1_grid() {
    static const Scenario s = build_ieee33_case(PreferenceCase::Case1, Mode::GridConnected, KappaSpec::fixed(60));
    return s;
}

}  // namespace

static void BM_CentralizedSolve(benchmark::State& state) {
    const Scenario& s = case1_grid();
    for (auto _ : state) {
        auto r = solve_centralized(s);
        benchmark::DoNotOptimize(r.objective);
    }
}
BENCHMARK(BM_CentralizedSolve)->Unit(benchmark::kMillisecond);

static void BM_MonolithicBuild(benchmark::State& state) {
    const Scenario& s = case1_grid();
    for (auto _ : state) {
        auto m = build_monolithic(s);
        benchmark::DoNotOptimize(m.coupling_rows);
    }
}
BENCHMARK(BM_MonolithicBuild)->Unit(benchmark::kMillisecond);

// One local solve as done inside an ADMM iteration, reusing the analysed KKT pattern.
static void BM_LocalSolve(benchmark::State& state) {
    const Scenario& s = case1_grid();
    const LocalProgram lp = build_local_program(static_cast<int>(state.range(0)), s);
    ConicSolver solver(lp.program.compile());
    Vector shift = Vector::Zero(lp.program.num_vars());
    for (const auto& sh : lp.shared) shift[sh.var] = 10.0;
    solver.set_diagonal_shift(shift);
    for (auto _ : state) {
        auto r = solver.solve();
        benchmark::DoNotOptimize(r.objective);
    }
}
BENCHMARK(BM_LocalSolve)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_AdmmIterations(benchmark::State& state) {
    const Scenario& s = case1_grid();
    AdmmParams p;
    p.max_iter = static_cast<int>(state.range(0));
    p.threads = 1;
    for (auto _ : state) {
        auto r = run_admm(s, p);
        benchmark::DoNotOptimize(r.objective);
    }
}
BENCHMARK(BM_AdmmIterations)->Arg(5)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
