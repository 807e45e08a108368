#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prefgrid/audit.hpp"
#include "prefgrid/coordinator.hpp"
#include "prefgrid/reference_solver.hpp"
#include "prefgrid/scenario.hpp"

namespace prefgrid {

enum class Method { Admm, Centralized };

const char* to_string(Method m);
Method parse_method(const std::string& text);

inline constexpr int kDsoNode = -1;

// Hourly flow on one edge, oriented from the sending microgrid. The DSO edge
// has from == kDsoNode.
struct EdgeSeries {
    int from = 0;
    int to = 0;
    std::vector<double> p;
    std::vector<double> q;
};

struct TradeSeries {
    int from = 0;  // owner
    int to = 0;    // partner, kDsoNode for the DSO
    std::vector<double> p;
};

struct TraceMeta {
    std::string scenario;
    std::string scenario_hash;
    int case_id = -1;
    std::string mode;
    std::string kappa;
    std::string method;
    double rho = 0.0;
    double eps_primal = 0.0;
    double eps_dual = 0.0;
    int max_iter = 0;
    std::uint64_t seed = 0;
};

struct SolutionTrace {
    TraceMeta meta;
    std::string status;  // optimal, converged, unconverged, infeasible, numerical-limit
    std::string message;
    int iterations = 0;
    int horizon = 0;
    int microgrids = 0;
    std::vector<EdgeSeries> edges;  // DSO edge first when present
    std::vector<TradeSeries> trades;
    std::vector<std::vector<double>> generation;  // [mg][hour], MW
    std::vector<std::vector<double>> storage_charge;
    std::vector<std::vector<double>> storage_discharge;
    std::vector<std::vector<double>> dso_trade;
    ObjectiveBreakdown objective;
    std::vector<ObjectiveBreakdown> objective_per_mg;
    std::vector<IterationRecord> history;
    AuditReport audit;

    bool ok() const { return status == "optimal" || status == "converged"; }
    double total() const { return objective.total(); }
    // Sum over ordered peer pairs and hours of |p_nm|.
    double traded_energy() const;
    // Largest hourly |p| on edge (a, b) in either orientation; kDsoNode for the DSO.
    double max_flow(int a, int b) const;
};

SolutionTrace trace_from_admm(const Scenario& scenario, const AdmmResult& result, const TraceMeta& meta);
SolutionTrace trace_from_centralized(const Scenario& scenario, const CentralizedResult& result, const TraceMeta& meta);

struct RunOptions {
    AdmmParams admm;
    SolverSettings solver;
    std::uint64_t profile_seed = 7;
    int horizon = 24;
};

SolutionTrace run_scenario(const Scenario& scenario, Method method, const RunOptions& options = {},
                           TraceMeta meta = {});
SolutionTrace run_case(int case_id, Mode mode, const KappaSpec& kappa, Method method, const RunOptions& options = {});

// Connected components of the graph of peer edges whose largest |p| exceeds eps.
std::vector<std::vector<int>> detect_clusters(const SolutionTrace& trace, double eps = 1e-3);

struct FlowRow {
    int hour = 0;
    std::string edge_from;
    std::string edge_to;
    double p_mw = 0.0;
    double q_mvar = 0.0;
};

std::vector<FlowRow> flow_rows(const SolutionTrace& trace);
std::string flows_csv(const SolutionTrace& trace);
std::vector<FlowRow> parse_flows_csv(const std::string& text);

std::string trace_json(const SolutionTrace& trace);
SolutionTrace parse_trace_json(const std::string& text);

enum class ExportFormat { Csv, Structured };

void export_flows(const SolutionTrace& trace, ExportFormat format, const std::string& path);
// Reads a structured trace, or a flow CSV when the file does not parse as JSON.
SolutionTrace import_trace(const std::string& path);

struct SweepPoint {
    double kappa = 0.0;
    double traded = 0.0;
    double objective = 0.0;
    std::string status;
};

std::vector<SweepPoint> sweep_kappa(int case_id, Mode mode, const std::vector<double>& kappas, Method method,
                                    const RunOptions& options = {});

}  // namespace prefgrid
