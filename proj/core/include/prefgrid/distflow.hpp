#pragma once

#include <stdexcept>
#include <vector>

#include "prefgrid/program.hpp"

namespace prefgrid {

class StructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A bus as seen by one builder. Ghost slots stand for a neighbour's boundary
// bus: they carry a voltage variable but no balance row.
struct BusSlot {
    int bus = 0;
    double v_min = 0.81;
    double v_max = 1.21;
    bool ghost = false;
};

struct FlowLine {
    int from = 0;  // slot index
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double p_min = -2.0;
    double p_max = 2.0;
    double q_min = -2.0;
    double q_max = 2.0;
    double l_max = 10.0;
    double loss_share = 1.0;  // fraction of R l priced by this builder
};

struct FlowNetwork {
    std::vector<BusSlot> slots;
    std::vector<FlowLine> lines;
};

// Variable indices, [slot][hour] for v and [line][hour] for the rest.
struct BranchFlowVars {
    std::vector<std::vector<int>> v;
    std::vector<std::vector<int>> p;
    std::vector<std::vector<int>> q;
    std::vector<std::vector<int>> l;
};

// Throws StructureError when the line set contains a cycle or a bad slot index.
void check_radial(const FlowNetwork& net);

// Adds v, P, Q, l with their boxes, the nodal balances at every non-ghost slot
// (P injection + inflow - R l - outflow = 0) and the voltage drop along every
// line. Injections are indexed [slot][hour].
BranchFlowVars distflow_constraints(ConicProgram& prog, const FlowNetwork& net,
                                    const std::vector<std::vector<LinExpr>>& p_injection,
                                    const std::vector<std::vector<LinExpr>>& q_injection, int horizon);

// P^2 + Q^2 <= v_from * l for every line and hour.
void soc_relaxation(ConicProgram& prog, const FlowNetwork& net, const BranchFlowVars& vars);

// (v l - P^2 - Q^2) / max(1, v l)
double cone_gap(double p, double q, double v, double l);

struct ExactnessFlag {
    int line = 0;
    int hour = 0;
    double gap = 0.0;
};

struct ExactnessReport {
    double max_gap = 0.0;
    double max_violation = 0.0;  // largest negative gap, reported as a positive number
    std::vector<ExactnessFlag> flagged;
};

ExactnessReport check_exactness(const FlowNetwork& net, const BranchFlowVars& vars, const Vector& x,
                                double threshold = 1e-5);

// sum over loss-charged lines of c_loss[t] * R * l, one entry per modeled hour.
std::vector<double> line_loss_cost(const FlowNetwork& net, const BranchFlowVars& vars, const Vector& x,
                                   const std::vector<double>& c_loss);

}  // namespace prefgrid
