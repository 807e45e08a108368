#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefgrid/conic_solver.hpp"
#include "prefgrid/scenario.hpp"
#include "prefgrid/subproblem.hpp"

namespace prefgrid {

struct IterationRecord {
    int iteration = 0;
    double primal = 0.0;  // r
    double dual = 0.0;    // s
    double objective = 0.0;
    double rho = 0.0;
};

struct AdmmParams {
    double rho = 10.0;
    int max_iter = 2000;
    double eps_primal = 1e-4;
    double eps_dual = 1e-4;
    bool adaptive_rho = false;  // residual balancing: x2 or /2 when r/s leaves [0.1, 10]
    int threads = 0;            // 0: hardware concurrency
    SolverSettings solver;
    std::function<void(const IterationRecord&)> on_iteration;
};

// Only the exchanged quantities travel between agents.
struct MessageEntry {
    SharedKind kind = SharedKind::TradeP;
    int partner = -1;
    int edge = -1;
    int hour = 0;
    double value = 0.0;
};

struct AgentMessage {
    int sender = 0;
    int iteration = 0;
    std::vector<MessageEntry> entries;
};

// Two copies of one coupled quantity. Trade pairs satisfy x_a + x_b = 0,
// physical pairs x_a = x_b.
struct CouplingPair {
    int agent_a = 0;
    int slot_a = 0;
    int agent_b = 0;
    int slot_b = 0;
    bool antisymmetric = false;
};

struct AdmmState {
    int iteration = 0;
    double rho = 10.0;
    std::vector<CouplingPair> pairs;
    std::vector<double> z;  // per pair, expressed for agent_a
    std::vector<std::vector<double>> u;  // [agent][slot]
    std::vector<IterationRecord> history;

    // Consensus target seen by agent for its slot.
    double target(int agent, int slot) const;
};

// Pairs every shared slot with its counterpart; throws StructureError if one is missing.
std::vector<CouplingPair> pair_shared(const Scenario& scenario, const std::vector<std::vector<SharedSlot>>& shared);

// z for the first copy given the two (dual-shifted) local values.
double consensus_update(double a, double b, bool antisymmetric);

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
};

// r = max pairwise disagreement, s = rho * max |z - z_prev|.
Residuals residuals(const std::vector<CouplingPair>& pairs, const std::vector<AgentMessage>& messages,
                    const std::vector<double>& z, const std::vector<double>& z_prev, double rho);

class LocalSolveError : public std::runtime_error {
public:
    LocalSolveError(int agent, int iteration, const std::string& what)
        : std::runtime_error(what), agent_(agent), iteration_(iteration) {}
    int agent() const { return agent_; }
    int iteration() const { return iteration_; }

private:
    int agent_;
    int iteration_;
};

struct AdmmResult {
    bool converged = false;
    int iterations = 0;
    AdmmState state;
    std::vector<LocalProgram> locals;
    std::vector<Vector> x;  // per agent
    std::vector<ObjectiveBreakdown> per_mg;
    double objective = 0.0;
    int reduced_accuracy_solves = 0;
};

AdmmResult run_admm(const Scenario& scenario, const AdmmParams& params = {});

}  // namespace prefgrid
