#pragma once

#include <optional>
#include <vector>

#include "prefgrid/conic_solver.hpp"
#include "prefgrid/devices.hpp"
#include "prefgrid/distflow.hpp"
#include "prefgrid/program.hpp"
#include "prefgrid/scenario.hpp"

namespace prefgrid {

// Modeled hours [begin, end); end < 0 means the scenario horizon.
struct HourRange {
    int begin = 0;
    int end = -1;

    int resolved_end(const Scenario& s) const { return end < 0 ? s.horizon : end; }
    int length(const Scenario& s) const { return resolved_end(s) - begin; }
};

// Signed trade with one counterparty (partner < 0 is the DSO), per hour.
struct TradeVars {
    int partner = -1;
    std::vector<int> p;
    std::vector<int> q;
    std::vector<int> p_plus;
    std::vector<int> p_minus;
    std::vector<int> q_plus;
    std::vector<int> q_minus;
};

// One microgrid's copy of an inter-microgrid line: P, Q, v at both ends and its own l.
struct EdgeCopy {
    int edge = 0;  // index into Scenario::edges
    bool parent = false;
    int line = 0;  // index into the owning network's lines
    std::vector<int> p;
    std::vector<int> q;
    std::vector<int> v_from;
    std::vector<int> v_to;
    std::vector<int> l;
};

struct MicrogridVariables {
    int mg = 0;
    int hours = 0;
    int first_hour = 0;
    FlowNetwork network;
    BranchFlowVars flow;
    DeviceVars devices;
    std::vector<TradeVars> trades;  // peers in partner order
    std::optional<TradeVars> dso;
    std::vector<int> grid_p;  // physical DSO exchange at the attachment bus (host only)
    std::vector<int> grid_q;
    std::vector<EdgeCopy> edges;
    std::vector<int> link_rows;
};

enum class SharedKind { TradeP, TradeQ, EdgeP, EdgeQ, EdgeVFrom, EdgeVTo };

const char* to_string(SharedKind kind);

// A quantity exchanged with a neighbour. For trades `partner` is the peer, for
// edge quantities `edge` indexes Scenario::edges.
struct SharedSlot {
    SharedKind kind = SharedKind::TradeP;
    int partner = -1;
    int edge = -1;
    int hour = 0;
    int var = 0;
};

struct AppendOptions {
    bool link_rows = true;
};

struct AppendResult {
    MicrogridVariables vars;
    std::vector<SharedSlot> shared;
};

// Adds one microgrid's variables, constraints and plain objective to prog.
AppendResult append_microgrid(ConicProgram& prog, int mg, const Scenario& scenario, const HourRange& hours,
                              const AppendOptions& options = {});

// Penalty 0.5 rho ||x_shared - target + dual||^2, aligned with LocalProgram::shared.
struct AdmmTerms {
    double rho = 10.0;
    std::vector<double> target;
    std::vector<double> dual;
};

struct LocalProgram {
    int mg = 0;
    HourRange hours;
    ConicProgram program;
    MicrogridVariables vars;
    std::vector<SharedSlot> shared;
    std::optional<AdmmTerms> admm;
};

LocalProgram build_local_program(int mg, const Scenario& scenario, const HourRange& hours = {},
                                 const std::optional<AdmmTerms>& admm = std::nullopt);

struct ObjectiveBreakdown {
    double dso = 0.0;
    double generation = 0.0;
    double losses = 0.0;
    double preference = 0.0;

    double total() const { return dso + generation + losses + preference; }
    ObjectiveBreakdown& operator+=(const ObjectiveBreakdown& o);
};

// Plain objective terms of one microgrid evaluated at x.
ObjectiveBreakdown objective_breakdown(const Scenario& scenario, const MicrogridVariables& vars, const Vector& x);

// Balance residuals of one microgrid at x: largest |row| over its bus balances and link rows.
double balance_residual(const ConicProgram& prog, const Vector& x);

SolveResult solve_conic(const LocalProgram& program, const SolverSettings& settings = {});

// Buses fixed to 1.0 p.u. squared voltage: the DSO bus in grid mode, otherwise
// the lowest bus of each microgrid component.
std::vector<int> reference_buses(const Scenario& scenario);

}  // namespace prefgrid
