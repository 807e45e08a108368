#include "prefgrid/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace prefgrid {

using nlohmann::json;

const char* to_string(Method m) { return m == Method::Admm ? "admm" : "central"; }

Method parse_method(const std::string& text) {
    if (text == "admm") return Method::Admm;
    if (text == "central" || text == "centralized") return Method::Centralized;
    throw ParseError("method: expected admm or central, got '" + text + "'");
}

double SolutionTrace::traded_energy() const {
    double sum = 0.0;
    for (const auto& t : trades)
        if (t.to != kDsoNode)
            for (double p : t.p) sum += std::abs(p);
    return sum;
}

double SolutionTrace::max_flow(int a, int b) const {
    double m = 0.0;
    for (const auto& e : edges)
        if ((e.from == a && e.to == b) || (e.from == b && e.to == a))
            for (double p : e.p) m = std::max(m, std::abs(p));
    return m;
}

namespace {

struct BlockView {
    const MicrogridVariables* vars;
    const Vector* x;
};

std::vector<double> values(const std::vector<int>& idx, const Vector& x) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(x[i]);
    return out;
}

std::vector<double> summed(const std::vector<std::vector<int>>& idx, const Vector& x, int hours) {
    std::vector<double> out(static_cast<std::size_t>(hours), 0.0);
    for (const auto& dev : idx)
        for (std::size_t t = 0; t < dev.size(); ++t) out[t] += x[dev[t]];
    return out;
}

void fill_from_blocks(SolutionTrace& tr, const Scenario& scenario, const std::vector<BlockView>& blocks) {
    tr.microgrids = scenario.size();
    tr.horizon = blocks.empty() ? scenario.horizon : blocks.front().vars->hours;
    for (const auto& b : blocks) {
        const auto& v = *b.vars;
        const auto& x = *b.x;
        if (!v.grid_p.empty()) tr.edges.insert(tr.edges.begin(), {kDsoNode, v.mg, values(v.grid_p, x), values(v.grid_q, x)});
    }
    for (std::size_t e = 0; e < scenario.edges.size(); ++e) {
        for (const auto& b : blocks)
            for (const auto& copy : b.vars->edges)
                if (copy.edge == static_cast<int>(e) && copy.parent) {
                    const int parent = b.vars->mg;
                    const auto& edge = scenario.edges[e];
                    const int child = edge.mg_a == parent ? edge.mg_b : edge.mg_a;
                    tr.edges.push_back({parent, child, values(copy.p, *b.x), values(copy.q, *b.x)});
                }
    }
    for (const auto& b : blocks) {
        const auto& v = *b.vars;
        const auto& x = *b.x;
        for (const auto& tv : v.trades) tr.trades.push_back({v.mg, tv.partner, values(tv.p, x)});
        if (v.dso) tr.trades.push_back({v.mg, kDsoNode, values(v.dso->p, x)});
        tr.generation.push_back(summed(v.devices.p_gen, x, v.hours));
        tr.storage_charge.push_back(summed(v.devices.p_char, x, v.hours));
        tr.storage_discharge.push_back(summed(v.devices.p_disc, x, v.hours));
        tr.dso_trade.push_back(v.dso ? values(v.dso->p, x) : std::vector<double>(static_cast<std::size_t>(v.hours), 0.0));
    }
}

}  // namespace

SolutionTrace trace_from_admm(const Scenario& scenario, const AdmmResult& result, const TraceMeta& meta) {
    SolutionTrace tr;
    tr.meta = meta;
    tr.status = result.converged ? "converged" : "unconverged";
    tr.iterations = result.iterations;
    std::vector<BlockView> blocks;
    for (std::size_t n = 0; n < result.locals.size(); ++n) blocks.push_back({&result.locals[n].vars, &result.x[n]});
    fill_from_blocks(tr, scenario, blocks);
    tr.objective_per_mg = result.per_mg;
    for (const auto& o : result.per_mg) tr.objective += o;
    tr.history = result.state.history;
    tr.audit = audit_solution(scenario, result);
    return tr;
}

SolutionTrace trace_from_centralized(const Scenario& scenario, const CentralizedResult& result, const TraceMeta& meta) {
    SolutionTrace tr;
    tr.meta = meta;
    tr.iterations = result.solve.iterations;
    switch (result.solve.status) {
        case SolveStatus::Optimal: tr.status = "optimal"; break;
        case SolveStatus::Infeasible: tr.status = "infeasible"; break;
        case SolveStatus::NumericalLimit: tr.status = "numerical-limit"; break;
    }
    tr.message = result.hint;
    tr.microgrids = scenario.size();
    tr.horizon = scenario.horizon;
    if (result.solve.status == SolveStatus::Infeasible) return tr;
    std::vector<BlockView> blocks;
    for (const auto& b : result.model.blocks) blocks.push_back({&b, &result.solve.x});
    fill_from_blocks(tr, scenario, blocks);
    tr.objective_per_mg = result.per_mg;
    for (const auto& o : result.per_mg) tr.objective += o;
    tr.audit = audit_solution(scenario, result);
    return tr;
}

SolutionTrace run_scenario(const Scenario& scenario, Method method, const RunOptions& options, TraceMeta meta) {
    require_valid(scenario);
    if (meta.scenario.empty()) meta.scenario = scenario.name;
    meta.scenario_hash = scenario_hash(scenario);
    meta.mode = to_string(scenario.mode);
    meta.method = to_string(method);
    if (method == Method::Centralized) return trace_from_centralized(scenario, solve_centralized(scenario, options.solver), meta);
    meta.rho = options.admm.rho;
    meta.eps_primal = options.admm.eps_primal;
    meta.eps_dual = options.admm.eps_dual;
    meta.max_iter = options.admm.max_iter;
    try {
        return trace_from_admm(scenario, run_admm(scenario, options.admm), meta);
    } catch (const LocalSolveError& e) {
        SolutionTrace tr;
        tr.meta = meta;
        tr.status = "infeasible";
        tr.message = e.what();
        tr.iterations = e.iteration();
        tr.microgrids = scenario.size();
        tr.horizon = scenario.horizon;
        return tr;
    }
}

SolutionTrace run_case(int case_id, Mode mode, const KappaSpec& kappa, Method method, const RunOptions& options) {
    if (case_id < 0 || case_id > 2) throw DomainError("case id must be 0, 1 or 2");
    const auto scenario =
        build_ieee33_case(static_cast<PreferenceCase>(case_id), mode, kappa, options.profile_seed, options.horizon);
    TraceMeta meta;
    meta.case_id = case_id;
    meta.kappa = kappa.label();
    meta.seed = options.profile_seed;
    return run_scenario(scenario, method, options, meta);
}

std::vector<std::vector<int>> detect_clusters(const SolutionTrace& trace, double eps) {
    const int n = trace.microgrids;
    std::vector<int> root(static_cast<std::size_t>(n));
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int a) {
        while (root[static_cast<std::size_t>(a)] != a) a = root[static_cast<std::size_t>(a)];
        return a;
    };
    for (const auto& e : trace.edges) {
        if (e.from == kDsoNode || e.from < 0 || e.to < 0 || e.from >= n || e.to >= n) continue;
        double m = 0.0;
        for (double p : e.p) m = std::max(m, std::abs(p));
        if (m > eps) root[static_cast<std::size_t>(find(e.from))] = find(e.to);
    }
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [r, g] : groups) out.push_back(std::move(g));
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// export

namespace {

std::string node_name(int node) { return node == kDsoNode ? "DSO" : std::to_string(node); }

int node_id(const std::string& name) {
    if (name == "DSO") return kDsoNode;
    try {
        return std::stoi(name);
    } catch (const std::logic_error&) {
        throw ParseError("unknown edge endpoint '" + name + "'");
    }
}

std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json breakdown_json(const ObjectiveBreakdown& o) {
    return {{"dso", o.dso}, {"generation", o.generation}, {"losses", o.losses}, {"preference", o.preference}, {"total", o.total()}};
}

ObjectiveBreakdown breakdown_from(const json& j) {
    ObjectiveBreakdown o;
    o.dso = j.at("dso").get<double>();
    o.generation = j.at("generation").get<double>();
    o.losses = j.at("losses").get<double>();
    o.preference = j.at("preference").get<double>();
    return o;
}

}  // namespace

std::vector<FlowRow> flow_rows(const SolutionTrace& trace) {
    std::vector<FlowRow> rows;
    for (int t = 0; t < trace.horizon; ++t)
        for (const auto& e : trace.edges)
            rows.push_back({t, node_name(e.from), node_name(e.to), e.p[static_cast<std::size_t>(t)],
                            e.q[static_cast<std::size_t>(t)]});
    return rows;
}

std::string flows_csv(const SolutionTrace& trace) {
    std::string out = "hour,edge_from,edge_to,p_mw,q_mvar\n";
    for (const auto& r : flow_rows(trace))
        out += std::to_string(r.hour) + "," + r.edge_from + "," + r.edge_to + "," + number(r.p_mw) + "," + number(r.q_mvar) + "\n";
    return out;
}

std::vector<FlowRow> parse_flows_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("hour,edge_from,edge_to,p_mw,q_mvar", 0) != 0)
        throw ParseError("flow table must start with hour,edge_from,edge_to,p_mw,q_mvar");
    std::vector<FlowRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string c[5];
        for (auto& cell : c)
            if (!std::getline(row, cell, ',')) throw ParseError("flow table row has fewer than 5 columns: " + line);
        try {
            rows.push_back({std::stoi(c[0]), c[1], c[2], std::stod(c[3]), std::stod(c[4])});
        } catch (const std::logic_error&) {
            throw ParseError("malformed flow table row: " + line);
        }
    }
    return rows;
}

std::string trace_json(const SolutionTrace& tr) {
    json j;
    j["meta"] = {{"scenario", tr.meta.scenario}, {"scenario_hash", tr.meta.scenario_hash}, {"case", tr.meta.case_id},
                 {"mode", tr.meta.mode},         {"kappa", tr.meta.kappa},                 {"method", tr.meta.method},
                 {"rho", tr.meta.rho},           {"eps_primal", tr.meta.eps_primal},       {"eps_dual", tr.meta.eps_dual},
                 {"max_iter", tr.meta.max_iter}, {"seed", tr.meta.seed}};
    j["status"] = tr.status;
    j["message"] = tr.message;
    j["iterations"] = tr.iterations;
    j["horizon"] = tr.horizon;
    j["microgrids"] = tr.microgrids;
    json edges = json::array();
    for (const auto& e : tr.edges) edges.push_back({{"from", node_name(e.from)}, {"to", node_name(e.to)}, {"p_mw", e.p}, {"q_mvar", e.q}});
    j["edges"] = edges;
    json trades = json::array();
    for (const auto& t : tr.trades) trades.push_back({{"from", node_name(t.from)}, {"to", node_name(t.to)}, {"p_mw", t.p}});
    j["trades"] = trades;
    j["microgrid_hours"] = {{"generation", tr.generation},
                            {"storage_charge", tr.storage_charge},
                            {"storage_discharge", tr.storage_discharge},
                            {"dso_trade", tr.dso_trade}};
    j["objective"] = breakdown_json(tr.objective);
    json per = json::array();
    for (const auto& o : tr.objective_per_mg) per.push_back(breakdown_json(o));
    j["objective_per_mg"] = per;
    json hist = json::array();
    for (const auto& h : tr.history)
        hist.push_back({{"iteration", h.iteration}, {"r", h.primal}, {"s", h.dual}, {"objective", h.objective}, {"rho", h.rho}});
    j["history"] = hist;
    j["audit"] = {{"balance", tr.audit.balance},
                  {"consensus", tr.audit.consensus},
                  {"split", tr.audit.split},
                  {"storage", tr.audit.storage},
                  {"cone", tr.audit.cone},
                  {"exactness_gap", tr.audit.exactness_gap},
                  {"inexact_lines", tr.audit.inexact_lines},
                  {"failures", tr.audit.failures}};
    return j.dump(1);
}

SolutionTrace parse_trace_json(const std::string& text) {
    SolutionTrace tr;
    try {
        const json j = json::parse(text);
        const auto& m = j.at("meta");
        tr.meta.scenario = m.at("scenario").get<std::string>();
        tr.meta.scenario_hash = m.at("scenario_hash").get<std::string>();
        tr.meta.case_id = m.at("case").get<int>();
        tr.meta.mode = m.at("mode").get<std::string>();
        tr.meta.kappa = m.at("kappa").get<std::string>();
        tr.meta.method = m.at("method").get<std::string>();
        tr.meta.rho = m.at("rho").get<double>();
        tr.meta.eps_primal = m.at("eps_primal").get<double>();
        tr.meta.eps_dual = m.at("eps_dual").get<double>();
        tr.meta.max_iter = m.at("max_iter").get<int>();
        tr.meta.seed = m.at("seed").get<std::uint64_t>();
        tr.status = j.at("status").get<std::string>();
        tr.message = j.value("message", std::string());
        tr.iterations = j.at("iterations").get<int>();
        tr.horizon = j.at("horizon").get<int>();
        tr.microgrids = j.at("microgrids").get<int>();
        for (const auto& e : j.at("edges"))
            tr.edges.push_back({node_id(e.at("from").get<std::string>()), node_id(e.at("to").get<std::string>()),
                                e.at("p_mw").get<std::vector<double>>(), e.at("q_mvar").get<std::vector<double>>()});
        for (const auto& t : j.at("trades"))
            tr.trades.push_back({node_id(t.at("from").get<std::string>()), node_id(t.at("to").get<std::string>()),
                                 t.at("p_mw").get<std::vector<double>>()});
        const auto& mh = j.at("microgrid_hours");
        tr.generation = mh.at("generation").get<std::vector<std::vector<double>>>();
        tr.storage_charge = mh.at("storage_charge").get<std::vector<std::vector<double>>>();
        tr.storage_discharge = mh.at("storage_discharge").get<std::vector<std::vector<double>>>();
        tr.dso_trade = mh.at("dso_trade").get<std::vector<std::vector<double>>>();
        tr.objective = breakdown_from(j.at("objective"));
        for (const auto& o : j.at("objective_per_mg")) tr.objective_per_mg.push_back(breakdown_from(o));
        for (const auto& h : j.at("history"))
            tr.history.push_back({h.at("iteration").get<int>(), h.at("r").get<double>(), h.at("s").get<double>(),
                                  h.at("objective").get<double>(), h.at("rho").get<double>()});
        const auto& a = j.at("audit");
        tr.audit.balance = a.at("balance").get<double>();
        tr.audit.consensus = a.at("consensus").get<double>();
        tr.audit.split = a.at("split").get<double>();
        tr.audit.storage = a.at("storage").get<double>();
        tr.audit.cone = a.at("cone").get<double>();
        tr.audit.exactness_gap = a.at("exactness_gap").get<double>();
        tr.audit.inexact_lines = a.at("inexact_lines").get<std::size_t>();
        tr.audit.failures = a.at("failures").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("trace document: ") + e.what());
    }
    return tr;
}

void export_flows(const SolutionTrace& trace, ExportFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << (format == ExportFormat::Csv ? flows_csv(trace) : trace_json(trace));
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

SolutionTrace import_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    const std::string text = os.str();
    if (!json::accept(text)) {
        SolutionTrace tr;
        tr.status = "imported";
        std::map<std::pair<int, int>, std::size_t> slot;
        int max_mg = -1;
        for (const auto& r : parse_flows_csv(text)) {
            const int a = node_id(r.edge_from);
            const int b = node_id(r.edge_to);
            auto [it, fresh] = slot.try_emplace({a, b}, tr.edges.size());
            if (fresh) tr.edges.push_back({a, b, {}, {}});
            auto& e = tr.edges[it->second];
            const auto h = static_cast<std::size_t>(r.hour);
            if (e.p.size() <= h) {
                e.p.resize(h + 1, 0.0);
                e.q.resize(h + 1, 0.0);
            }
            e.p[h] = r.p_mw;
            e.q[h] = r.q_mvar;
            tr.horizon = std::max(tr.horizon, r.hour + 1);
            max_mg = std::max({max_mg, a, b});
        }
        tr.microgrids = max_mg + 1;
        return tr;
    }
    return parse_trace_json(text);
}

std::vector<SweepPoint> sweep_kappa(int case_id, Mode mode, const std::vector<double>& kappas, Method method,
                                    const RunOptions& options) {
    std::vector<SweepPoint> out;
    for (double k : kappas) {
        auto tr = run_case(case_id, mode, KappaSpec::fixed(k), method, options);
        out.push_back({k, tr.traded_energy(), tr.total(), tr.status});
    }
    return out;
}

}  // namespace prefgrid
