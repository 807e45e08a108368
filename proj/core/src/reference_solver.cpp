#include "prefgrid/reference_solver.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace prefgrid {

MonolithicProgram build_monolithic(const Scenario& scenario, const HourRange& hours) {
    MonolithicProgram mono;
    // Within a component without the DSO the link rows sum to zero once the
    // coupling holds, so the first microgrid's rows are left out.
    std::vector<bool> keep_link(static_cast<std::size_t>(scenario.size()), true);
    for (const auto& comp : scenario.components()) {
        const bool has_dso = scenario.grid_connected() && scenario.dso &&
                             std::find(comp.begin(), comp.end(), scenario.dso->mg) != comp.end();
        if (!has_dso) keep_link[static_cast<std::size_t>(comp.front())] = false;
    }
    for (int n = 0; n < scenario.size(); ++n) {
        AppendOptions opts;
        opts.link_rows = keep_link[static_cast<std::size_t>(n)];
        auto res = append_microgrid(mono.program, n, scenario, hours, opts);
        mono.blocks.push_back(std::move(res.vars));
        mono.shared.push_back(std::move(res.shared));
    }

    std::map<std::tuple<int, int, int, int>, int> index;  // (kind, owner, key, hour) -> var
    for (int n = 0; n < scenario.size(); ++n) {
        for (const auto& s : mono.shared[static_cast<std::size_t>(n)]) {
            const int key = s.partner >= 0 ? s.partner : s.edge;
            index[{static_cast<int>(s.kind), n, key, s.hour}] = s.var;
        }
    }
    for (int n = 0; n < scenario.size(); ++n) {
        for (const auto& s : mono.shared[static_cast<std::size_t>(n)]) {
            if (s.kind == SharedKind::TradeP || s.kind == SharedKind::TradeQ) {
                if (s.partner < n) continue;
                const int other = index.at({static_cast<int>(s.kind), s.partner, n, s.hour});
                mono.program.add_equality(LinExpr::var(s.var) + LinExpr::var(other), 0.0, RowTag::Consensus);
            } else {
                const auto& e = scenario.edges[static_cast<std::size_t>(s.edge)];
                const int peer = e.mg_a == n ? e.mg_b : e.mg_a;
                if (peer < n) continue;
                const int other = index.at({static_cast<int>(s.kind), peer, s.edge, s.hour});
                mono.program.add_equality(LinExpr::var(s.var), LinExpr::var(other), RowTag::Consensus);
            }
            ++mono.coupling_rows;
        }
    }
    return mono;
}

CentralizedResult solve_centralized(const Scenario& scenario, const SolverSettings& settings) {
    CentralizedResult out;
    out.model = build_monolithic(scenario);
    out.solve = solve_conic(out.model.program.compile(), settings);
    if (out.solve.status == SolveStatus::Optimal) {
        for (const auto& block : out.model.blocks) {
            out.per_mg.push_back(objective_breakdown(scenario, block, out.solve.x));
            out.objective += out.per_mg.back().total();
        }
        return out;
    }
    if (out.solve.status == SolveStatus::Infeasible) {
        std::string names;
        for (int n = 0; n < scenario.size(); ++n) {
            auto local = build_local_program(n, scenario);
            if (solve_conic(local, settings).status == SolveStatus::Infeasible)
                names += (names.empty() ? "" : ", ") + std::to_string(n);
        }
        out.hint = names.empty() ? "every microgrid is feasible alone; the coupling between them cannot hold"
                                 : "balance cannot hold in microgrid(s) " + names;
    }
    return out;
}

}  // namespace prefgrid
