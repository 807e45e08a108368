#include "prefgrid/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prefgrid/distflow.hpp"

namespace prefgrid {

std::vector<double> link_residuals(const MicrogridVariables& vars, const Vector& x) {
    std::vector<double> out;
    for (int t = 0; t < vars.hours; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        double rp = 0.0;
        double rq = 0.0;
        for (const auto& e : vars.edges) {
            const double sign = e.parent ? -1.0 : 1.0;
            rp += sign * x[e.p[ti]];
            rq += sign * x[e.q[ti]];
        }
        if (!vars.grid_p.empty()) {
            rp += x[vars.grid_p[ti]];
            rq += x[vars.grid_q[ti]];
        }
        for (const auto& tv : vars.trades) {
            rp -= x[tv.p[ti]];
            rq -= x[tv.q[ti]];
        }
        if (vars.dso) {
            rp -= x[vars.dso->p[ti]];
            rq -= x[vars.dso->q[ti]];
        }
        out.push_back(std::max(std::abs(rp), std::abs(rq)));
    }
    return out;
}

namespace {

std::string fmt(const char* what, double value, double limit) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.3e exceeds %.1e", what, value, limit);
    return buf;
}

}  // namespace

AuditReport audit_solution(const Scenario& scenario, const std::vector<AuditBlock>& blocks, const AuditTolerances& tol) {
    AuditReport rep;
    std::vector<std::vector<SharedSlot>> shared;
    for (const auto& b : blocks) {
        const auto& x = *b.x;
        const auto& v = *b.vars;
        rep.balance = std::max({rep.balance, b.program->max_violation(x, RowTag::ActiveBalance),
                                b.program->max_violation(x, RowTag::ReactiveBalance)});
        for (double r : link_residuals(v, x)) rep.balance = std::max(rep.balance, r);

        auto split = [&](const TradeVars& tv) {
            for (std::size_t t = 0; t < tv.p_plus.size(); ++t)
                rep.split = std::max(rep.split, std::min(x[tv.p_plus[t]], x[tv.p_minus[t]]));
        };
        for (const auto& tv : v.trades) split(tv);
        if (v.dso) split(*v.dso);
        for (std::size_t s = 0; s < v.devices.p_char.size(); ++s)
            for (std::size_t t = 0; t < v.devices.p_char[s].size(); ++t)
                rep.storage = std::max(rep.storage, std::min(x[v.devices.p_char[s][t]], x[v.devices.p_disc[s][t]]));

        auto ex = check_exactness(v.network, v.flow, x, tol.exactness);
        rep.cone = std::max(rep.cone, ex.max_violation);
        rep.exactness_gap = std::max(rep.exactness_gap, ex.max_gap);
        rep.inexact_lines += ex.flagged.size();
        shared.push_back(*b.shared);
    }

    const auto pairs = pair_shared(scenario, shared);
    for (const auto& p : pairs) {
        const auto& a = blocks[static_cast<std::size_t>(p.agent_a)];
        const auto& b = blocks[static_cast<std::size_t>(p.agent_b)];
        const double xa = (*a.x)[(*a.shared)[static_cast<std::size_t>(p.slot_a)].var];
        const double xb = (*b.x)[(*b.shared)[static_cast<std::size_t>(p.slot_b)].var];
        rep.consensus = std::max(rep.consensus, std::abs(p.antisymmetric ? xa + xb : xa - xb));
    }

    if (rep.balance > tol.balance) rep.failures.push_back(fmt("balance residual", rep.balance, tol.balance));
    if (rep.consensus > tol.consensus) rep.failures.push_back(fmt("consensus residual", rep.consensus, tol.consensus));
    if (rep.split > tol.split) rep.failures.push_back(fmt("trade split overlap", rep.split, tol.split));
    if (rep.storage > tol.storage) rep.failures.push_back(fmt("simultaneous charge and discharge", rep.storage, tol.storage));
    if (rep.cone > tol.cone) rep.failures.push_back(fmt("cone violation", rep.cone, tol.cone));
    return rep;
}

AuditReport audit_solution(const Scenario& scenario, const AdmmResult& result, const AuditTolerances& tol) {
    std::vector<AuditBlock> blocks;
    for (std::size_t n = 0; n < result.locals.size(); ++n)
        blocks.push_back({&result.locals[n].program, &result.locals[n].vars, &result.x[n], &result.locals[n].shared});
    return audit_solution(scenario, blocks, tol);
}

AuditReport audit_solution(const Scenario& scenario, const CentralizedResult& result, const AuditTolerances& tol) {
    std::vector<AuditBlock> blocks;
    for (std::size_t n = 0; n < result.model.blocks.size(); ++n)
        blocks.push_back({&result.model.program, &result.model.blocks[n], &result.solve.x, &result.model.shared[n]});
    return audit_solution(scenario, blocks, tol);
}

}  // namespace prefgrid
