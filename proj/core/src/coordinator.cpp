#include "prefgrid/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <thread>
#include <tuple>

#include "prefgrid/distflow.hpp"

namespace prefgrid {

double AdmmState::target(int agent, int slot) const {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        if (p.agent_a == agent && p.slot_a == slot) return z[k];
        if (p.agent_b == agent && p.slot_b == slot) return p.antisymmetric ? -z[k] : z[k];
    }
    return 0.0;
}

std::vector<CouplingPair> pair_shared(const Scenario& scenario, const std::vector<std::vector<SharedSlot>>& shared) {
    std::map<std::tuple<int, int, int, int>, int> index;  // (kind, owner, key, hour) -> slot
    for (std::size_t n = 0; n < shared.size(); ++n)
        for (std::size_t i = 0; i < shared[n].size(); ++i) {
            const auto& s = shared[n][i];
            index[{static_cast<int>(s.kind), static_cast<int>(n), s.partner >= 0 ? s.partner : s.edge, s.hour}] =
                static_cast<int>(i);
        }
    std::vector<CouplingPair> pairs;
    for (std::size_t n = 0; n < shared.size(); ++n) {
        const int me = static_cast<int>(n);
        for (std::size_t i = 0; i < shared[n].size(); ++i) {
            const auto& s = shared[n][i];
            const bool trade = s.kind == SharedKind::TradeP || s.kind == SharedKind::TradeQ;
            int peer = s.partner;
            int key = me;
            if (!trade) {
                const auto& e = scenario.edges[static_cast<std::size_t>(s.edge)];
                peer = e.mg_a == me ? e.mg_b : e.mg_a;
                key = s.edge;
            }
            if (peer < me) continue;
            auto it = index.find({static_cast<int>(s.kind), peer, key, s.hour});
            if (it == index.end())
                throw StructureError("shared quantity of microgrid " + std::to_string(me) + " has no counterpart in " +
                                     std::to_string(peer));
            pairs.push_back({me, static_cast<int>(i), peer, it->second, trade});
        }
    }
    return pairs;
}

double consensus_update(double a, double b, bool antisymmetric) {
    return antisymmetric ? 0.5 * (a - b) : 0.5 * (a + b);
}

Residuals residuals(const std::vector<CouplingPair>& pairs, const std::vector<AgentMessage>& messages,
                    const std::vector<double>& z, const std::vector<double>& z_prev, double rho) {
    Residuals r;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        const double a = messages[static_cast<std::size_t>(p.agent_a)].entries[static_cast<std::size_t>(p.slot_a)].value;
        const double b = messages[static_cast<std::size_t>(p.agent_b)].entries[static_cast<std::size_t>(p.slot_b)].value;
        r.primal = std::max(r.primal, std::abs(p.antisymmetric ? a + b : a - b));
        r.dual = std::max(r.dual, rho * std::abs(z[k] - z_prev[k]));
    }
    return r;
}

namespace {

struct Agent {
    LocalProgram local;
    std::unique_ptr<ConicSolver> solver;
    Vector q_base;
    double c_base = 0.0;
    SolveResult last;
};

void set_shift(Agent& a, double rho) {
    Vector shift = Vector::Zero(a.local.program.num_vars());
    for (const auto& s : a.local.shared) shift[s.var] += rho;
    a.solver->set_diagonal_shift(shift);
}

}  // namespace

AdmmResult run_admm(const Scenario& scenario, const AdmmParams& params) {
    if (!(params.rho > 0.0)) throw DomainError("ADMM penalty must be positive");
    const int N = scenario.size();
    std::vector<Agent> agents(static_cast<std::size_t>(N));
    std::vector<std::vector<SharedSlot>> shared;
    for (int n = 0; n < N; ++n) {
        auto& a = agents[static_cast<std::size_t>(n)];
        a.local = build_local_program(n, scenario);
        auto problem = a.local.program.compile();
        a.q_base = problem.q;
        a.c_base = problem.constant;
        a.solver = std::make_unique<ConicSolver>(std::move(problem), params.solver);
        shared.push_back(a.local.shared);
    }

    AdmmResult res;
    auto& st = res.state;
    st.rho = params.rho;
    st.pairs = pair_shared(scenario, shared);
    st.z.assign(st.pairs.size(), 0.0);
    for (int n = 0; n < N; ++n) st.u.emplace_back(shared[static_cast<std::size_t>(n)].size(), 0.0);
    for (auto& a : agents) set_shift(a, st.rho);

    // per-agent target lookup: (pair, sign) for every slot
    std::vector<std::vector<std::pair<int, double>>> target_of(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) target_of[static_cast<std::size_t>(n)].assign(shared[static_cast<std::size_t>(n)].size(), {-1, 0.0});
    for (std::size_t k = 0; k < st.pairs.size(); ++k) {
        const auto& p = st.pairs[k];
        target_of[static_cast<std::size_t>(p.agent_a)][static_cast<std::size_t>(p.slot_a)] = {static_cast<int>(k), 1.0};
        target_of[static_cast<std::size_t>(p.agent_b)][static_cast<std::size_t>(p.slot_b)] = {static_cast<int>(k), p.antisymmetric ? -1.0 : 1.0};
    }
    auto target = [&](int n, std::size_t i) {
        auto [k, sign] = target_of[static_cast<std::size_t>(n)][i];
        return k < 0 ? 0.0 : sign * st.z[static_cast<std::size_t>(k)];
    };

    int workers = params.threads > 0 ? params.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, N));

    std::vector<AgentMessage> messages(static_cast<std::size_t>(N));
    for (int it = 1; it <= params.max_iter; ++it) {
        st.iteration = it;
        for (int n = 0; n < N; ++n) {
            auto& a = agents[static_cast<std::size_t>(n)];
            Vector q = a.q_base;
            double c = a.c_base;
            const auto& u = st.u[static_cast<std::size_t>(n)];
            for (std::size_t i = 0; i < a.local.shared.size(); ++i) {
                const double d = target(n, i) - u[i];
                q[a.local.shared[i].var] -= st.rho * d;
                c += 0.5 * st.rho * d * d;
            }
            a.solver->set_linear_cost(q);
            a.solver->set_constant_cost(c);
        }
        auto solve_range = [&](int w) {
            for (int n = w; n < N; n += workers) agents[static_cast<std::size_t>(n)].last = agents[static_cast<std::size_t>(n)].solver->solve();
        };
        if (workers == 1) {
            solve_range(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(solve_range, w);
            for (auto& t : pool) t.join();
        }

        double objective = 0.0;
        for (int n = 0; n < N; ++n) {
            auto& a = agents[static_cast<std::size_t>(n)];
            if (a.last.status == SolveStatus::Infeasible)
                throw LocalSolveError(n, it, "local program of microgrid " + std::to_string(n) + " is infeasible at iteration " +
                                                 std::to_string(it));
            if (a.last.status == SolveStatus::NumericalLimit && a.last.primal_residual > 1e-6)
                throw LocalSolveError(n, it, "local solve of microgrid " + std::to_string(n) +
                                                 " stopped at its numerical limit at iteration " + std::to_string(it));
            if (a.last.reduced_accuracy || a.last.status != SolveStatus::Optimal) ++res.reduced_accuracy_solves;
            auto& msg = messages[static_cast<std::size_t>(n)];
            msg.sender = n;
            msg.iteration = it;
            msg.entries.clear();
            for (const auto& s : a.local.shared) msg.entries.push_back({s.kind, s.partner, s.edge, s.hour, a.last.x[s.var]});
            objective += objective_breakdown(scenario, a.local.vars, a.last.x).total();
        }

        const std::vector<double> z_prev = st.z;
        for (std::size_t k = 0; k < st.pairs.size(); ++k) {
            const auto& p = st.pairs[k];
            const double xa = messages[static_cast<std::size_t>(p.agent_a)].entries[static_cast<std::size_t>(p.slot_a)].value;
            const double xb = messages[static_cast<std::size_t>(p.agent_b)].entries[static_cast<std::size_t>(p.slot_b)].value;
            st.z[k] = consensus_update(xa + st.u[static_cast<std::size_t>(p.agent_a)][static_cast<std::size_t>(p.slot_a)],
                                       xb + st.u[static_cast<std::size_t>(p.agent_b)][static_cast<std::size_t>(p.slot_b)],
                                       p.antisymmetric);
        }
        for (int n = 0; n < N; ++n) {
            auto& u = st.u[static_cast<std::size_t>(n)];
            const auto& msg = messages[static_cast<std::size_t>(n)];
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += msg.entries[i].value - target(n, i);
        }
        const Residuals r = residuals(st.pairs, messages, st.z, z_prev, st.rho);
        IterationRecord rec{it, r.primal, r.dual, objective, st.rho};
        st.history.push_back(rec);
        if (params.on_iteration) params.on_iteration(rec);
        res.iterations = it;
        if (r.primal <= params.eps_primal && r.dual <= params.eps_dual) {
            res.converged = true;
            break;
        }
        if (params.adaptive_rho) {
            double factor = 1.0;
            if (r.primal > 10.0 * r.dual) factor = 2.0;
            else if (r.dual > 10.0 * r.primal) factor = 0.5;
            if (factor != 1.0) {
                st.rho *= factor;
                for (auto& u : st.u)
                    for (double& v : u) v /= factor;
                for (auto& a : agents) set_shift(a, st.rho);
            }
        }
    }

    for (auto& a : agents) {
        res.per_mg.push_back(objective_breakdown(scenario, a.local.vars, a.last.x));
        res.objective += res.per_mg.back().total();
        res.x.push_back(a.last.x);
        res.locals.push_back(std::move(a.local));
    }
    return res;
}

}  // namespace prefgrid
