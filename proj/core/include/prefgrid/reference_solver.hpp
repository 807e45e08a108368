#pragma once

#include <string>
#include <vector>

#include "prefgrid/conic_solver.hpp"
#include "prefgrid/scenario.hpp"
#include "prefgrid/subproblem.hpp"

namespace prefgrid {

// All microgrid blocks in one program plus the explicit coupling rows
// p_nm + p_mn = 0, q_nm + q_mn = 0 and Y_n = Y_m.
struct MonolithicProgram {
    ConicProgram program;
    std::vector<MicrogridVariables> blocks;
    std::vector<std::vector<SharedSlot>> shared;
    std::size_t coupling_rows = 0;
};

MonolithicProgram build_monolithic(const Scenario& scenario, const HourRange& hours = {});

struct CentralizedResult {
    SolveResult solve;
    MonolithicProgram model;
    double objective = 0.0;
    std::vector<ObjectiveBreakdown> per_mg;
    std::string hint;  // names the microgrids whose balance cannot hold when infeasible
};

CentralizedResult solve_centralized(const Scenario& scenario, const SolverSettings& settings = {});

}  // namespace prefgrid
