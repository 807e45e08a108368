#include "prefgrid/distflow.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace prefgrid {

void check_radial(const FlowNetwork& net) {
    const int n = static_cast<int>(net.slots.size());
    std::vector<int> root(static_cast<std::size_t>(n));
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int a) {
        while (root[static_cast<std::size_t>(a)] != a) a = root[static_cast<std::size_t>(a)];
        return a;
    };
    for (const auto& line : net.lines) {
        if (line.from < 0 || line.to < 0 || line.from >= n || line.to >= n)
            throw StructureError("line references an unknown bus slot");
        int a = find(line.from);
        int b = find(line.to);
        if (a == b)
            throw StructureError("line " + std::to_string(net.slots[static_cast<std::size_t>(line.from)].bus) + "-" +
                                 std::to_string(net.slots[static_cast<std::size_t>(line.to)].bus) +
                                 " closes a cycle; the network must be radial");
        root[static_cast<std::size_t>(a)] = b;
    }
}

BranchFlowVars distflow_constraints(ConicProgram& prog, const FlowNetwork& net,
                                    const std::vector<std::vector<LinExpr>>& p_injection,
                                    const std::vector<std::vector<LinExpr>>& q_injection, int horizon) {
    check_radial(net);
    const auto H = static_cast<std::size_t>(horizon);
    BranchFlowVars vars;
    for (const auto& slot : net.slots) {
        std::vector<int> v(H);
        for (auto& idx : v) idx = prog.add_var(slot.v_min, slot.v_max);
        vars.v.push_back(std::move(v));
    }
    for (const auto& line : net.lines) {
        std::vector<int> p(H), q(H), l(H);
        for (std::size_t t = 0; t < H; ++t) {
            p[t] = prog.add_var(line.p_min, line.p_max);
            q[t] = prog.add_var(line.q_min, line.q_max);
            l[t] = prog.add_var(0.0, line.l_max);
        }
        vars.p.push_back(std::move(p));
        vars.q.push_back(std::move(q));
        vars.l.push_back(std::move(l));
    }
    for (std::size_t s = 0; s < net.slots.size(); ++s) {
        if (net.slots[s].ghost) continue;
        for (std::size_t t = 0; t < H; ++t) {
            LinExpr pb = p_injection.empty() ? LinExpr() : p_injection[s][t];
            LinExpr qb = q_injection.empty() ? LinExpr() : q_injection[s][t];
            for (std::size_t k = 0; k < net.lines.size(); ++k) {
                const auto& line = net.lines[k];
                if (line.to == static_cast<int>(s)) {
                    pb.add(vars.p[k][t], 1.0).add(vars.l[k][t], -line.r);
                    qb.add(vars.q[k][t], 1.0).add(vars.l[k][t], -line.x);
                }
                if (line.from == static_cast<int>(s)) {
                    pb.add(vars.p[k][t], -1.0);
                    qb.add(vars.q[k][t], -1.0);
                }
            }
            if (!pb.empty()) prog.add_equality(pb, 0.0, RowTag::ActiveBalance);
            if (!qb.empty()) prog.add_equality(qb, 0.0, RowTag::ReactiveBalance);
        }
    }
    for (std::size_t k = 0; k < net.lines.size(); ++k) {
        const auto& line = net.lines[k];
        const auto from = static_cast<std::size_t>(line.from);
        const auto to = static_cast<std::size_t>(line.to);
        for (std::size_t t = 0; t < H; ++t) {
            LinExpr rhs = LinExpr::var(vars.v[from][t]);
            rhs.add(vars.p[k][t], -2.0 * line.r).add(vars.q[k][t], -2.0 * line.x);
            rhs.add(vars.l[k][t], line.r * line.r + line.x * line.x);
            prog.add_equality(LinExpr::var(vars.v[to][t]), rhs, RowTag::VoltageDrop);
        }
    }
    return vars;
}

void soc_relaxation(ConicProgram& prog, const FlowNetwork& net, const BranchFlowVars& vars) {
    for (std::size_t k = 0; k < net.lines.size(); ++k) {
        const auto from = static_cast<std::size_t>(net.lines[k].from);
        for (std::size_t t = 0; t < vars.l[k].size(); ++t)
            prog.add_rotated_soc(LinExpr::var(vars.v[from][t]), LinExpr::var(vars.l[k][t]),
                                 {LinExpr::var(vars.p[k][t]), LinExpr::var(vars.q[k][t])});
    }
}

double cone_gap(double p, double q, double v, double l) {
    const double vl = v * l;
    return (vl - p * p - q * q) / std::max(1.0, vl);
}

ExactnessReport check_exactness(const FlowNetwork& net, const BranchFlowVars& vars, const Vector& x,
                                double threshold) {
    ExactnessReport rep;
    for (std::size_t k = 0; k < net.lines.size(); ++k) {
        const auto from = static_cast<std::size_t>(net.lines[k].from);
        for (std::size_t t = 0; t < vars.l[k].size(); ++t) {
            double g = cone_gap(x[vars.p[k][t]], x[vars.q[k][t]], x[vars.v[from][t]], x[vars.l[k][t]]);
            rep.max_gap = std::max(rep.max_gap, g);
            rep.max_violation = std::max(rep.max_violation, -g);
            if (g > threshold) rep.flagged.push_back({static_cast<int>(k), static_cast<int>(t), g});
        }
    }
    return rep;
}

std::vector<double> line_loss_cost(const FlowNetwork& net, const BranchFlowVars& vars, const Vector& x,
                                   const std::vector<double>& c_loss) {
    std::vector<double> out(c_loss.size(), 0.0);
    for (std::size_t k = 0; k < net.lines.size(); ++k) {
        const double w = net.lines[k].loss_share * net.lines[k].r;
        if (w == 0.0) continue;
        for (std::size_t t = 0; t < vars.l[k].size() && t < out.size(); ++t) out[t] += c_loss[t] * w * x[vars.l[k][t]];
    }
    return out;
}

}  // namespace prefgrid
