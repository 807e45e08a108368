#include "prefgrid/subproblem.hpp"

#include <algorithm>
#include <map>

namespace prefgrid {

const char* to_string(SharedKind kind) {
    switch (kind) {
        case SharedKind::TradeP: return "trade_p";
        case SharedKind::TradeQ: return "trade_q";
        case SharedKind::EdgeP: return "edge_p";
        case SharedKind::EdgeQ: return "edge_q";
        case SharedKind::EdgeVFrom: return "edge_v_from";
        case SharedKind::EdgeVTo: return "edge_v_to";
    }
    return "unknown";
}

ObjectiveBreakdown& ObjectiveBreakdown::operator+=(const ObjectiveBreakdown& o) {
    dso += o.dso;
    generation += o.generation;
    losses += o.losses;
    preference += o.preference;
    return *this;
}

std::vector<int> reference_buses(const Scenario& scenario) {
    std::vector<int> out;
    for (const auto& comp : scenario.components()) {
        if (scenario.dso && std::find(comp.begin(), comp.end(), scenario.dso->mg) != comp.end()) {
            out.push_back(scenario.dso->bus);
            continue;
        }
        int lowest = -1;
        for (int m : comp)
            for (const auto& b : scenario.microgrids[static_cast<std::size_t>(m)].buses)
                if (lowest < 0 || b.index < lowest) lowest = b.index;
        if (lowest >= 0) out.push_back(lowest);
    }
    return out;
}

namespace {

const Bus* find_bus(const Scenario& s, int index) {
    for (const auto& mg : s.microgrids)
        for (const auto& b : mg.buses)
            if (b.index == index) return &b;
    return nullptr;
}

TradeVars add_trade(ConicProgram& prog, int partner, int hours, double limit, double q_limit) {
    TradeVars tv;
    tv.partner = partner;
    for (int t = 0; t < hours; ++t) {
        int p = prog.add_var();
        int q = prog.add_var();
        int pp = prog.add_var(0.0, limit);
        int pm = prog.add_var(0.0, limit);
        int qp = prog.add_var(0.0, q_limit);
        int qm = prog.add_var(0.0, q_limit);
        prog.add_equality(LinExpr::var(p), LinExpr::var(pp) - LinExpr::var(pm), RowTag::TradeSplit);
        prog.add_equality(LinExpr::var(q), LinExpr::var(qp) - LinExpr::var(qm), RowTag::TradeSplit);
        tv.p.push_back(p);
        tv.q.push_back(q);
        tv.p_plus.push_back(pp);
        tv.p_minus.push_back(pm);
        tv.q_plus.push_back(qp);
        tv.q_minus.push_back(qm);
    }
    return tv;
}

}  // namespace

AppendResult append_microgrid(ConicProgram& prog, int mg_id, const Scenario& scenario, const HourRange& hours,
                              const AppendOptions& options) {
    const int begin = hours.begin;
    const int end = hours.resolved_end(scenario);
    if (begin < 0 || end > scenario.horizon || begin >= end) throw DomainError("hour range outside the scenario horizon");
    if (mg_id < 0 || mg_id >= scenario.size()) throw DomainError("unknown microgrid");
    const int H = end - begin;
    const auto& mg = scenario.microgrids[static_cast<std::size_t>(mg_id)];
    const bool host = scenario.grid_connected() && scenario.dso && scenario.dso->mg == mg_id;

    AppendResult out;
    auto& vars = out.vars;
    vars.mg = mg_id;
    vars.hours = H;
    vars.first_hour = begin;

    // network: local buses, then one ghost slot per incident inter-microgrid edge
    std::map<int, int> slot_of;
    for (const auto& b : mg.buses) {
        slot_of[b.index] = static_cast<int>(vars.network.slots.size());
        vars.network.slots.push_back({b.index, b.v_min, b.v_max, false});
    }
    auto make_line = [](const LineSegment& seg, int from, int to, double share) {
        FlowLine fl;
        fl.from = from;
        fl.to = to;
        fl.r = seg.r;
        fl.x = seg.x;
        fl.p_min = seg.p_min;
        fl.p_max = seg.p_max;
        fl.q_min = seg.q_min;
        fl.q_max = seg.q_max;
        fl.l_max = seg.l_max;
        fl.loss_share = share;
        return fl;
    };
    for (const auto& seg : mg.lines)
        vars.network.lines.push_back(make_line(seg, slot_of.at(seg.from_bus), slot_of.at(seg.to_bus), 1.0));
    for (std::size_t e = 0; e < scenario.edges.size(); ++e) {
        const auto& seg = scenario.edges[e].line;
        const bool parent = mg.has_bus(seg.from_bus);
        const bool child = mg.has_bus(seg.to_bus);
        if (!parent && !child) continue;
        const int remote = parent ? seg.to_bus : seg.from_bus;
        const Bus* rb = find_bus(scenario, remote);
        if (!rb) throw ReferenceError("edge references unknown bus " + std::to_string(remote));
        const int ghost = static_cast<int>(vars.network.slots.size());
        vars.network.slots.push_back({remote, rb->v_min, rb->v_max, true});
        const int from = parent ? slot_of.at(seg.from_bus) : ghost;
        const int to = parent ? ghost : slot_of.at(seg.to_bus);
        EdgeCopy copy;
        copy.edge = static_cast<int>(e);
        copy.parent = parent;
        copy.line = static_cast<int>(vars.network.lines.size());
        // Both copies price half of the loss so each copy's l sits on its cone.
        vars.network.lines.push_back(make_line(seg, from, to, 0.5));
        vars.edges.push_back(copy);
    }

    DeviceOptions dev_opts;
    dev_opts.terminal_soc = scenario.terminal_soc;
    vars.devices = device_constraints(prog, mg.generators, mg.storages, H, dev_opts);

    if (host) {
        for (int t = 0; t < H; ++t) {
            vars.grid_p.push_back(prog.add_var());
            vars.grid_q.push_back(prog.add_var());
        }
    }

    const std::size_t S = vars.network.slots.size();
    std::vector<std::vector<LinExpr>> p_inj(S, std::vector<LinExpr>(static_cast<std::size_t>(H)));
    std::vector<std::vector<LinExpr>> q_inj = p_inj;
    for (std::size_t g = 0; g < mg.generators.size(); ++g) {
        const auto s = static_cast<std::size_t>(slot_of.at(mg.generators[g].bus));
        for (int t = 0; t < H; ++t) {
            p_inj[s][static_cast<std::size_t>(t)].add(vars.devices.p_gen[g][static_cast<std::size_t>(t)], 1.0);
            q_inj[s][static_cast<std::size_t>(t)].add(vars.devices.q_gen[g][static_cast<std::size_t>(t)], 1.0);
        }
    }
    for (std::size_t k = 0; k < mg.storages.size(); ++k) {
        const auto& st = mg.storages[k];
        const auto s = static_cast<std::size_t>(slot_of.at(st.bus));
        for (int t = 0; t < H; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            p_inj[s][ti].add(vars.devices.p_char[k][ti], -st.eta_char).add(vars.devices.p_disc[k][ti], st.eta_disc);
        }
    }
    for (const auto& nl : mg.net_loads) {
        const auto s = static_cast<std::size_t>(slot_of.at(nl.bus));
        for (int t = 0; t < H; ++t) {
            const auto ht = static_cast<std::size_t>(begin + t);
            p_inj[s][static_cast<std::size_t>(t)] -= LinExpr(nl.p[ht]);
            q_inj[s][static_cast<std::size_t>(t)] -= LinExpr(nl.q[ht]);
        }
    }
    if (host) {
        const auto s = static_cast<std::size_t>(slot_of.at(scenario.dso->bus));
        for (int t = 0; t < H; ++t) {
            p_inj[s][static_cast<std::size_t>(t)].add(vars.grid_p[static_cast<std::size_t>(t)], 1.0);
            q_inj[s][static_cast<std::size_t>(t)].add(vars.grid_q[static_cast<std::size_t>(t)], 1.0);
        }
    }

    vars.flow = distflow_constraints(prog, vars.network, p_inj, q_inj, H);
    soc_relaxation(prog, vars.network, vars.flow);

    for (auto& copy : vars.edges) {
        const auto& fl = vars.network.lines[static_cast<std::size_t>(copy.line)];
        copy.p = vars.flow.p[static_cast<std::size_t>(copy.line)];
        copy.q = vars.flow.q[static_cast<std::size_t>(copy.line)];
        copy.l = vars.flow.l[static_cast<std::size_t>(copy.line)];
        copy.v_from = vars.flow.v[static_cast<std::size_t>(fl.from)];
        copy.v_to = vars.flow.v[static_cast<std::size_t>(fl.to)];
    }

    for (int bus : reference_buses(scenario)) {
        auto it = slot_of.find(bus);
        if (it == slot_of.end()) continue;
        for (int t = 0; t < H; ++t)
            prog.add_equality(LinExpr::var(vars.flow.v[static_cast<std::size_t>(it->second)][static_cast<std::size_t>(t)]),
                              1.0, RowTag::ReferenceVoltage);
    }

    const auto partners = scenario.partners()[static_cast<std::size_t>(mg_id)];
    for (int m : partners) vars.trades.push_back(add_trade(prog, m, H, scenario.trade_limit, scenario.trade_limit));
    if (scenario.grid_connected()) vars.dso = add_trade(prog, -1, H, scenario.dso_limit, scenario.dso_limit);

    if (options.link_rows) {
        for (int t = 0; t < H; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            LinExpr lp;
            LinExpr lq;
            for (const auto& copy : vars.edges) {
                const double sign = copy.parent ? -1.0 : 1.0;
                lp.add(copy.p[ti], sign);
                lq.add(copy.q[ti], sign);
            }
            if (host) {
                lp.add(vars.grid_p[ti], 1.0);
                lq.add(vars.grid_q[ti], 1.0);
            }
            for (const auto& tv : vars.trades) {
                lp.add(tv.p[ti], -1.0);
                lq.add(tv.q[ti], -1.0);
            }
            if (vars.dso) {
                lp.add(vars.dso->p[ti], -1.0);
                lq.add(vars.dso->q[ti], -1.0);
            }
            if (!lp.empty()) vars.link_rows.push_back(prog.add_equality(lp, 0.0, RowTag::TradeLink));
            if (!lq.empty()) vars.link_rows.push_back(prog.add_equality(lq, 0.0, RowTag::TradeLink));
        }
    }

    // objective
    add_generation_cost(prog, mg.generators, vars.devices);
    const auto& kappa = scenario.prices.kappa;
    const auto& lp = scenario.preferences.lambda_prime;
    for (int t = 0; t < H; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const auto ht = static_cast<std::size_t>(begin + t);
        const double k = kappa[ht];
        if (vars.dso) {
            prog.add_linear_cost(vars.dso->p[ti], scenario.prices.c_dso[ht]);
            const double w = k * scenario.preferences.lambda_dso_prime[static_cast<std::size_t>(mg_id)];
            prog.add_linear_cost(vars.dso->p_plus[ti], w);
            prog.add_linear_cost(vars.dso->p_minus[ti], w);
        }
        const double wnn = k * lp(mg_id, mg_id);
        for (std::size_t s = 0; s < mg.storages.size(); ++s) {
            prog.add_linear_cost(vars.devices.p_char[s][ti], wnn);
            prog.add_linear_cost(vars.devices.p_disc[s][ti], wnn);
        }
        for (const auto& tv : vars.trades) {
            const double w = k * lp(mg_id, tv.partner);
            prog.add_linear_cost(tv.p_plus[ti], w);
            prog.add_linear_cost(tv.p_minus[ti], w);
        }
        for (std::size_t l = 0; l < vars.network.lines.size(); ++l) {
            const auto& fl = vars.network.lines[l];
            if (fl.loss_share > 0.0) prog.add_linear_cost(vars.flow.l[l][ti], scenario.prices.c_loss[ht] * fl.r * fl.loss_share);
        }
    }

    for (const auto& tv : vars.trades) {
        for (int t = 0; t < H; ++t)
            out.shared.push_back({SharedKind::TradeP, tv.partner, -1, begin + t, tv.p[static_cast<std::size_t>(t)]});
        for (int t = 0; t < H; ++t)
            out.shared.push_back({SharedKind::TradeQ, tv.partner, -1, begin + t, tv.q[static_cast<std::size_t>(t)]});
    }
    for (const auto& copy : vars.edges) {
        const std::pair<SharedKind, const std::vector<int>*> parts[] = {{SharedKind::EdgeP, &copy.p},
                                                                         {SharedKind::EdgeQ, &copy.q},
                                                                         {SharedKind::EdgeVFrom, &copy.v_from},
                                                                         {SharedKind::EdgeVTo, &copy.v_to}};
        for (const auto& [kind, idx] : parts)
            for (int t = 0; t < H; ++t)
                out.shared.push_back({kind, -1, copy.edge, begin + t, (*idx)[static_cast<std::size_t>(t)]});
    }
    return out;
}

LocalProgram build_local_program(int mg, const Scenario& scenario, const HourRange& hours,
                                 const std::optional<AdmmTerms>& admm) {
    LocalProgram lp;
    lp.mg = mg;
    lp.hours = hours;
    auto res = append_microgrid(lp.program, mg, scenario, hours);
    lp.vars = std::move(res.vars);
    lp.shared = std::move(res.shared);
    if (admm) {
        if (admm->target.size() != lp.shared.size() || admm->dual.size() != lp.shared.size())
            throw DomainError("ADMM terms do not match the shared quantities");
        if (!(admm->rho > 0.0)) throw DomainError("ADMM penalty must be positive");
        for (std::size_t i = 0; i < lp.shared.size(); ++i)
            lp.program.add_squared_cost(LinExpr::var(lp.shared[i].var) + LinExpr(admm->dual[i] - admm->target[i]),
                                        0.5 * admm->rho);
        lp.admm = admm;
    }
    return lp;
}

ObjectiveBreakdown objective_breakdown(const Scenario& scenario, const MicrogridVariables& vars, const Vector& x) {
    ObjectiveBreakdown ob;
    const auto& mg = scenario.microgrids[static_cast<std::size_t>(vars.mg)];
    const auto& lp = scenario.preferences.lambda_prime;
    for (std::size_t g = 0; g < mg.generators.size(); ++g) {
        const auto& gen = mg.generators[g];
        for (int idx : vars.devices.p_gen[g]) {
            const double p = x[idx];
            ob.generation += 0.5 * gen.a * gen.a * p * p + gen.b * p + gen.c;
        }
    }
    std::vector<double> c_loss;
    for (int t = 0; t < vars.hours; ++t) c_loss.push_back(scenario.prices.c_loss[static_cast<std::size_t>(vars.first_hour + t)]);
    for (double c : line_loss_cost(vars.network, vars.flow, x, c_loss)) ob.losses += c;
    for (int t = 0; t < vars.hours; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const auto ht = static_cast<std::size_t>(vars.first_hour + t);
        const double k = scenario.prices.kappa[ht];
        if (vars.dso) {
            ob.dso += scenario.prices.c_dso[ht] * x[vars.dso->p[ti]];
            ob.preference += k * scenario.preferences.lambda_dso_prime[static_cast<std::size_t>(vars.mg)] *
                             (x[vars.dso->p_plus[ti]] + x[vars.dso->p_minus[ti]]);
        }
        for (std::size_t s = 0; s < mg.storages.size(); ++s)
            ob.preference += k * lp(vars.mg, vars.mg) * (x[vars.devices.p_char[s][ti]] + x[vars.devices.p_disc[s][ti]]);
        for (const auto& tv : vars.trades)
            ob.preference += k * lp(vars.mg, tv.partner) * (x[tv.p_plus[ti]] + x[tv.p_minus[ti]]);
    }
    return ob;
}

double balance_residual(const ConicProgram& prog, const Vector& x) {
    double r = 0.0;
    for (RowTag tag : {RowTag::ActiveBalance, RowTag::ReactiveBalance, RowTag::TradeLink})
        r = std::max(r, prog.max_violation(x, tag));
    return r;
}

SolveResult solve_conic(const LocalProgram& program, const SolverSettings& settings) {
    return solve_conic(program.program.compile(), settings);
}

}  // namespace prefgrid
