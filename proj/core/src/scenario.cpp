#include "prefgrid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scenario_json.hpp"

namespace prefgrid {

using nlohmann::json;

const char* to_string(Mode mode) { return mode == Mode::GridConnected ? "grid" : "island"; }

Mode parse_mode(const std::string& text) {
    if (text == "grid" || text == "grid-connected") return Mode::GridConnected;
    if (text == "island" || text == "islanding") return Mode::Islanding;
    throw ParseError("mode: expected grid or island, got '" + text + "'");
}

bool MicrogridModel::has_bus(int bus) const {
    return std::any_of(buses.begin(), buses.end(), [bus](const Bus& b) { return b.index == bus; });
}

int Scenario::owner_of_bus(int bus) const {
    for (const auto& mg : microgrids)
        if (mg.has_bus(bus)) return mg.id;
    return -1;
}

int Scenario::parent_of(const InterEdge& e) const { return owner_of_bus(e.line.from_bus); }
int Scenario::child_of(const InterEdge& e) const { return owner_of_bus(e.line.to_bus); }

std::vector<std::vector<int>> Scenario::components() const {
    const int n = size();
    std::vector<int> root(static_cast<std::size_t>(n));
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int a) {
        while (root[static_cast<std::size_t>(a)] != a) a = root[static_cast<std::size_t>(a)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(a)])];
        return a;
    };
    for (const auto& e : edges) {
        if (e.mg_a < 0 || e.mg_b < 0 || e.mg_a >= n || e.mg_b >= n) continue;
        root[static_cast<std::size_t>(find(e.mg_a))] = find(e.mg_b);
    }
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [r, g] : groups) out.push_back(std::move(g));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<int>> Scenario::partners() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(size()));
    for (const auto& comp : components())
        for (int n : comp)
            for (int m : comp)
                if (m != n) out[static_cast<std::size_t>(n)].push_back(m);
    return out;
}

KappaSpec KappaSpec::fixed(double v) {
    KappaSpec k;
    k.kind = Kind::Fixed;
    k.value = v;
    return k;
}

KappaSpec KappaSpec::uniform(std::uint64_t seed, double low, double high) {
    KappaSpec k;
    k.kind = Kind::Uniform;
    k.seed = seed;
    k.low = low;
    k.high = high;
    return k;
}

KappaSpec KappaSpec::parse(const std::string& text) {
    const std::string prefix = "random:";
    try {
        if (text.rfind(prefix, 0) == 0) return uniform(std::stoull(text.substr(prefix.size())));
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size() || v < 0.0) throw std::invalid_argument(text);
        return fixed(v);
    } catch (const std::logic_error&) {
        throw ParseError("kappa: expected a nonnegative number or random:<seed>, got '" + text + "'");
    }
}

std::string KappaSpec::label() const {
    if (kind == Kind::Uniform) return "random:" + std::to_string(seed);
    std::ostringstream os;
    os << value;
    return os.str();
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<double> kappa_series(const KappaSpec& spec, int horizon) {
    std::vector<double> out(static_cast<std::size_t>(std::max(0, horizon)));
    if (spec.kind == KappaSpec::Kind::Fixed) {
        std::fill(out.begin(), out.end(), spec.value);
        return out;
    }
    std::mt19937_64 rng(spec.seed);
    for (auto& k : out) k = spec.low + (spec.high - spec.low) * unit_uniform(rng);
    return out;
}

// ---------------------------------------------------------------------------
// config document

namespace {

std::string at_path(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ParseError(path + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(at_path(path, key) + ": missing required key");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ParseError(path + ": expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
    return j.get<int>();
}

double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : number(*it, at_path(path, key));
}

const json& array(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path + ": expected an array");
    return j;
}

std::vector<double> series(const json& j, const std::string& path, int horizon) {
    if (j.is_number()) return std::vector<double>(static_cast<std::size_t>(horizon), j.get<double>());
    std::vector<double> out;
    const auto& arr = array(j, path);
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(number(arr[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

LineSegment parse_line(const json& j, const std::string& path) {
    LineSegment l;
    l.from_bus = integer(member(j, "from", path), at_path(path, "from"));
    l.to_bus = integer(member(j, "to", path), at_path(path, "to"));
    l.r = number(member(j, "r", path), at_path(path, "r"));
    l.x = number(member(j, "x", path), at_path(path, "x"));
    double pmax = number_or(j, "p_max", path, 2.0);
    double qmax = number_or(j, "q_max", path, 2.0);
    l.p_min = number_or(j, "p_min", path, -pmax);
    l.p_max = pmax;
    l.q_min = number_or(j, "q_min", path, -qmax);
    l.q_max = qmax;
    l.l_max = number_or(j, "l_max", path, 10.0);
    return l;
}

FuelGenerator parse_generator(const json& j, const std::string& path) {
    FuelGenerator g;
    g.bus = integer(member(j, "bus", path), at_path(path, "bus"));
    g.a = number_or(j, "a", path, g.a);
    g.b = number_or(j, "b", path, g.b);
    g.c = number_or(j, "c", path, g.c);
    g.p_min = number_or(j, "p_min", path, g.p_min);
    g.p_max = number_or(j, "p_max", path, g.p_max);
    g.q_min = number_or(j, "q_min", path, g.q_min);
    g.q_max = number_or(j, "q_max", path, g.q_max);
    g.ramp = number_or(j, "ramp", path, g.ramp);
    return g;
}

StorageUnit parse_storage(const json& j, const std::string& path) {
    StorageUnit s;
    s.bus = integer(member(j, "bus", path), at_path(path, "bus"));
    s.x_min = number_or(j, "x_min", path, s.x_min);
    s.x_max = number_or(j, "x_max", path, s.x_max);
    s.x0 = number_or(j, "x0", path, 0.5 * s.x_max);
    s.eta_char = number_or(j, "eta_char", path, s.eta_char);
    s.eta_disc = number_or(j, "eta_disc", path, s.eta_disc);
    s.p_char_max = number_or(j, "p_char_max", path, s.p_char_max);
    s.p_disc_max = number_or(j, "p_disc_max", path, s.p_disc_max);
    return s;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// CSV with header bus,hour,p_net,q_net.
std::map<int, NetLoad> read_net_load_csv(const std::string& path, int horizon) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty net-load file");
    line.erase(std::remove(line.begin(), line.end(), '\r'), line.end());
    if (line != "bus,hour,p_net,q_net") throw ParseError(path + ": header must be bus,hour,p_net,q_net");
    std::map<int, NetLoad> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::string cell[4];
        for (auto& c : cell)
            if (!std::getline(row, c, ',')) throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 columns");
        int bus = 0;
        int hour = 0;
        double p = 0.0;
        double q = 0.0;
        try {
            bus = std::stoi(cell[0]);
            hour = std::stoi(cell[1]);
            p = std::stod(cell[2]);
            q = std::stod(cell[3]);
        } catch (const std::logic_error&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed number");
        }
        if (hour < 0 || hour >= horizon)
            throw ParseError(path + ":" + std::to_string(lineno) + ": hour outside horizon");
        auto& nl = out[bus];
        nl.bus = bus;
        nl.p.resize(static_cast<std::size_t>(horizon), 0.0);
        nl.q.resize(static_cast<std::size_t>(horizon), 0.0);
        nl.p[static_cast<std::size_t>(hour)] = p;
        nl.q[static_cast<std::size_t>(hour)] = q;
    }
    return out;
}

void require_bus(const MicrogridModel& mg, int bus, const std::string& path) {
    if (!mg.has_bus(bus))
        throw ReferenceError(path + ": bus " + std::to_string(bus) + " does not belong to microgrid " +
                             std::to_string(mg.id));
}

}  // namespace

Scenario load_scenario(const std::string& document, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("document is not valid JSON: ") + e.what());
    }
    Scenario s;
    s.name = root.value("name", std::string("scenario"));
    s.horizon = root.contains("horizon") ? integer(root["horizon"], "horizon") : 24;
    if (s.horizon < 1) throw ParseError("horizon: must be at least 1");
    s.mode = parse_mode(root.value("mode", std::string("grid")));
    double vmin = 0.9;
    double vmax = 1.1;
    if (root.contains("voltage_bounds")) {
        const auto& vb = array(root["voltage_bounds"], "voltage_bounds");
        if (vb.size() != 2) throw ParseError("voltage_bounds: expected [min, max]");
        vmin = number(vb[0], "voltage_bounds[0]");
        vmax = number(vb[1], "voltage_bounds[1]");
    }
    s.trade_limit = number_or(root, "trade_limit", "", s.trade_limit);
    s.dso_limit = number_or(root, "dso_limit", "", s.dso_limit);
    s.terminal_soc = root.value("terminal_soc", false);

    const auto& mgs = array(member(root, "microgrids", ""), "microgrids");
    for (std::size_t i = 0; i < mgs.size(); ++i) {
        const std::string path = "microgrids[" + std::to_string(i) + "]";
        const auto& jm = mgs[i];
        MicrogridModel mg;
        mg.id = jm.contains("id") ? integer(jm["id"], path + ".id") : static_cast<int>(i);
        if (mg.id != static_cast<int>(i)) throw ParseError(path + ".id: microgrid ids must equal their position");
        const auto& jb = array(member(jm, "buses", path), path + ".buses");
        for (std::size_t b = 0; b < jb.size(); ++b) {
            const std::string bp = path + ".buses[" + std::to_string(b) + "]";
            Bus bus;
            bus.v_min = vmin * vmin;
            bus.v_max = vmax * vmax;
            if (jb[b].is_object()) {
                bus.index = integer(member(jb[b], "index", bp), bp + ".index");
                if (jb[b].contains("v_min")) bus.v_min = std::pow(number(jb[b]["v_min"], bp + ".v_min"), 2);
                if (jb[b].contains("v_max")) bus.v_max = std::pow(number(jb[b]["v_max"], bp + ".v_max"), 2);
            } else {
                bus.index = integer(jb[b], bp);
            }
            mg.buses.push_back(bus);
        }
        if (jm.contains("lines")) {
            const auto& jl = array(jm["lines"], path + ".lines");
            for (std::size_t l = 0; l < jl.size(); ++l) {
                const std::string lp = path + ".lines[" + std::to_string(l) + "]";
                auto line = parse_line(jl[l], lp);
                require_bus(mg, line.from_bus, lp + ".from");
                require_bus(mg, line.to_bus, lp + ".to");
                mg.lines.push_back(line);
            }
        }
        if (jm.contains("generators")) {
            const auto& jg = array(jm["generators"], path + ".generators");
            for (std::size_t g = 0; g < jg.size(); ++g) {
                const std::string gp = path + ".generators[" + std::to_string(g) + "]";
                auto gen = parse_generator(jg[g], gp);
                require_bus(mg, gen.bus, gp + ".bus");
                mg.generators.push_back(gen);
            }
        }
        if (jm.contains("storages")) {
            const auto& js = array(jm["storages"], path + ".storages");
            for (std::size_t k = 0; k < js.size(); ++k) {
                const std::string sp = path + ".storages[" + std::to_string(k) + "]";
                auto st = parse_storage(js[k], sp);
                require_bus(mg, st.bus, sp + ".bus");
                mg.storages.push_back(st);
            }
        }
        std::map<int, NetLoad> loads;
        if (jm.contains("net_load")) {
            const auto& jn = jm["net_load"];
            const std::string np = path + ".net_load";
            if (jn.contains("file")) {
                std::string f = jn["file"].get<std::string>();
                if (!f.empty() && f[0] != '/') f = base_dir + "/" + f;
                for (auto& [bus, nl] : read_net_load_csv(f, s.horizon))
                    if (mg.has_bus(bus)) loads[bus] = nl;
            } else {
                const auto& ji = array(member(jn, "inline", np), np + ".inline");
                for (std::size_t k = 0; k < ji.size(); ++k) {
                    const std::string ip = np + ".inline[" + std::to_string(k) + "]";
                    NetLoad nl;
                    nl.bus = integer(member(ji[k], "bus", ip), ip + ".bus");
                    require_bus(mg, nl.bus, ip + ".bus");
                    nl.p = series(member(ji[k], "p", ip), ip + ".p", s.horizon);
                    nl.q = ji[k].contains("q") ? series(ji[k]["q"], ip + ".q", s.horizon)
                                               : std::vector<double>(static_cast<std::size_t>(s.horizon), 0.0);
                    loads[nl.bus] = nl;
                }
            }
        }
        for (auto& [bus, nl] : loads) mg.net_loads.push_back(std::move(nl));
        s.microgrids.push_back(std::move(mg));
    }

    if (root.contains("edges")) {
        const auto& je = array(root["edges"], "edges");
        for (std::size_t e = 0; e < je.size(); ++e) {
            const std::string ep = "edges[" + std::to_string(e) + "]";
            InterEdge edge;
            edge.mg_a = integer(member(je[e], "from_mg", ep), ep + ".from_mg");
            edge.mg_b = integer(member(je[e], "to_mg", ep), ep + ".to_mg");
            edge.line = parse_line(member(je[e], "line", ep), ep + ".line");
            if (edge.mg_a > edge.mg_b) std::swap(edge.mg_a, edge.mg_b);
            for (int m : {edge.mg_a, edge.mg_b})
                if (m < 0 || m >= s.size()) throw ReferenceError(ep + ": microgrid " + std::to_string(m) + " does not exist");
            int from_owner = s.owner_of_bus(edge.line.from_bus);
            int to_owner = s.owner_of_bus(edge.line.to_bus);
            if (from_owner < 0) throw ReferenceError(ep + ".line.from: bus " + std::to_string(edge.line.from_bus) + " does not exist");
            if (to_owner < 0) throw ReferenceError(ep + ".line.to: bus " + std::to_string(edge.line.to_bus) + " does not exist");
            s.edges.push_back(edge);
        }
    }
    if (root.contains("dso")) {
        DsoAttachment d;
        d.mg = integer(member(root["dso"], "mg", "dso"), "dso.mg");
        d.bus = integer(member(root["dso"], "bus", "dso"), "dso.bus");
        if (d.mg < 0 || d.mg >= s.size()) throw ReferenceError("dso.mg: microgrid does not exist");
        require_bus(s.microgrids[static_cast<std::size_t>(d.mg)], d.bus, "dso.bus");
        s.dso = d;
    }

    KappaSpec kappa = KappaSpec::fixed(60.0);
    if (root.contains("kappa")) {
        const auto& jk = root["kappa"];
        if (jk.contains("fixed")) {
            kappa = KappaSpec::fixed(number(jk["fixed"], "kappa.fixed"));
        } else if (jk.contains("uniform")) {
            const auto& ju = jk["uniform"];
            kappa = KappaSpec::uniform(static_cast<std::uint64_t>(integer(member(ju, "seed", "kappa.uniform"), "kappa.uniform.seed")),
                                       number_or(ju, "low", "kappa.uniform", 20.0),
                                       number_or(ju, "high", "kappa.uniform", 100.0));
            s.seed = kappa.seed;
        } else {
            throw ParseError("kappa: expected 'fixed' or 'uniform'");
        }
    }
    s.prices.kappa = kappa_series(kappa, s.horizon);
    s.prices.c_dso = s.prices.kappa;
    s.prices.c_loss = s.prices.kappa;
    if (root.contains("prices")) {
        const auto& jp = root["prices"];
        if (jp.contains("c_dso")) s.prices.c_dso = series(jp["c_dso"], "prices.c_dso", s.horizon);
        if (jp.contains("c_loss")) s.prices.c_loss = series(jp["c_loss"], "prices.c_loss", s.horizon);
    }

    const int n = s.size();
    s.preferences.kappa = s.prices.kappa;
    s.preferences.lambda_prime = Eigen::MatrixXd::Zero(n, n);
    const auto& jp = array(member(root, "preferences", ""), "preferences");
    if (static_cast<int>(jp.size()) != n) throw ParseError("preferences: expected one row per microgrid");
    std::vector<double> dso_col;
    for (int r = 0; r < n; ++r) {
        const std::string rp = "preferences[" + std::to_string(r) + "]";
        const auto& row = array(jp[static_cast<std::size_t>(r)], rp);
        if (static_cast<int>(row.size()) != n && static_cast<int>(row.size()) != n + 1)
            throw ParseError(rp + ": expected " + std::to_string(n) + " or " + std::to_string(n + 1) + " columns");
        for (int c = 0; c < n; ++c)
            s.preferences.lambda_prime(r, c) = number(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
        dso_col.push_back(static_cast<int>(row.size()) == n + 1 ? number(row[static_cast<std::size_t>(n)], rp + "[" + std::to_string(n) + "]") : 1.0);
    }
    if (s.grid_connected()) s.preferences.lambda_dso_prime = dso_col;

    for (const auto& e : s.edges) {
        for (int bus : {e.line.from_bus, e.line.to_bus}) {
            int owner = s.owner_of_bus(bus);
            auto& bb = s.microgrids[static_cast<std::size_t>(owner)].boundary_buses;
            if (std::find(bb.begin(), bb.end(), bus) == bb.end()) bb.push_back(bus);
        }
    }
    if (s.dso) {
        auto& bb = s.microgrids[static_cast<std::size_t>(s.dso->mg)].boundary_buses;
        if (std::find(bb.begin(), bb.end(), s.dso->bus) == bb.end()) bb.push_back(s.dso->bus);
    }
    for (auto& mg : s.microgrids) std::sort(mg.boundary_buses.begin(), mg.boundary_buses.end());
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    auto slash = path.find_last_of('/');
    std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return load_scenario(read_file(path), dir);
}

// ---------------------------------------------------------------------------
// validation

namespace {

// True if the undirected graph is a forest; `connected` reports whether it is a single tree.
bool is_forest(const std::vector<int>& nodes, const std::vector<std::pair<int, int>>& links, bool& connected) {
    std::map<int, int> root;
    for (int v : nodes) root[v] = v;
    std::function<int(int)> find = [&](int a) {
        int r = a;
        while (root[r] != r) r = root[r];
        while (root[a] != r) {
            int next = root[a];
            root[a] = r;
            a = next;
        }
        return r;
    };
    bool acyclic = true;
    std::size_t merges = 0;
    for (auto [a, b] : links) {
        if (!root.count(a) || !root.count(b)) continue;
        int ra = find(a);
        int rb = find(b);
        if (ra == rb) {
            acyclic = false;
        } else {
            root[ra] = rb;
            ++merges;
        }
    }
    connected = nodes.empty() || merges + 1 == nodes.size();
    return acyclic;
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> out;
    auto add = [&](std::string entity, std::string rule) { out.push_back({std::move(entity), std::move(rule)}); };
    const int n = s.size();
    if (n == 0) add("scenario", "no microgrids");
    if (s.horizon < 1) add("scenario", "horizon must be at least 1");

    std::map<int, int> bus_owner;
    for (const auto& mg : s.microgrids) {
        const std::string who = "microgrid " + std::to_string(mg.id);
        for (const auto& b : mg.buses) {
            if (bus_owner.count(b.index))
                add(who, "bus " + std::to_string(b.index) + " already belongs to microgrid " + std::to_string(bus_owner[b.index]));
            else
                bus_owner[b.index] = mg.id;
            if (!(0.0 < b.v_min && b.v_min <= b.v_max)) add(who, "bus " + std::to_string(b.index) + " has invalid voltage bounds");
        }
        std::vector<int> nodes;
        for (const auto& b : mg.buses) nodes.push_back(b.index);
        std::vector<std::pair<int, int>> links;
        for (const auto& l : mg.lines) {
            if (!mg.has_bus(l.from_bus) || !mg.has_bus(l.to_bus)) add(who, "line references a bus outside the microgrid");
            if (l.from_bus == l.to_bus) add(who, "line with identical endpoints");
            if (l.r < 0.0 || l.x < 0.0) add(who, "line with negative impedance");
            links.emplace_back(l.from_bus, l.to_bus);
        }
        bool connected = true;
        if (!is_forest(nodes, links, connected)) add(who, "internal lines contain a cycle (radiality)");
        else if (!connected) add(who, "internal lines do not connect every bus");
        for (const auto& g : mg.generators) {
            if (!mg.has_bus(g.bus)) add(who, "generator at bus " + std::to_string(g.bus) + " outside the microgrid");
            for (auto& msg : check_generator(g)) add(who, "generator: " + msg);
        }
        for (const auto& st : mg.storages) {
            if (!mg.has_bus(st.bus)) add(who, "storage at bus " + std::to_string(st.bus) + " outside the microgrid");
            for (auto& msg : check_storage(st)) add(who, "storage: " + msg);
        }
        for (const auto& nl : mg.net_loads) {
            if (!mg.has_bus(nl.bus)) add(who, "net load at bus " + std::to_string(nl.bus) + " outside the microgrid");
            if (static_cast<int>(nl.p.size()) != s.horizon || static_cast<int>(nl.q.size()) != s.horizon)
                add(who, "net-load series length differs from horizon at bus " + std::to_string(nl.bus));
        }
    }

    std::set<std::pair<int, int>> seen_lines;
    auto note_line = [&](const LineSegment& l, const std::string& who) {
        auto key = std::minmax(l.from_bus, l.to_bus);
        if (!seen_lines.insert(key).second)
            add(who, "duplicate line " + std::to_string(key.first) + "-" + std::to_string(key.second));
    };
    for (const auto& mg : s.microgrids)
        for (const auto& l : mg.lines) note_line(l, "microgrid " + std::to_string(mg.id));
    std::set<std::pair<int, int>> seen_pairs;
    std::vector<std::pair<int, int>> mg_links;
    for (const auto& e : s.edges) {
        const std::string who = "edge (" + std::to_string(e.mg_a) + "," + std::to_string(e.mg_b) + ")";
        if (e.mg_a >= e.mg_b) add(who, "edge must be stored with mg_a < mg_b");
        if (!seen_pairs.insert({e.mg_a, e.mg_b}).second) add(who, "duplicate edge between the same microgrids");
        int fo = bus_owner.count(e.line.from_bus) ? bus_owner[e.line.from_bus] : -1;
        int to = bus_owner.count(e.line.to_bus) ? bus_owner[e.line.to_bus] : -1;
        if (std::minmax(fo, to) != std::minmax(e.mg_a, e.mg_b)) add(who, "line endpoints do not join the two microgrids");
        if (e.line.r < 0.0 || e.line.x < 0.0) add(who, "line with negative impedance");
        note_line(e.line, who);
        mg_links.emplace_back(e.mg_a, e.mg_b);
    }
    std::vector<int> mg_ids(static_cast<std::size_t>(n));
    std::iota(mg_ids.begin(), mg_ids.end(), 0);
    bool connected = true;
    if (!is_forest(mg_ids, mg_links, connected)) add("scenario", "microgrid-level graph contains a cycle (radiality)");

    if (s.mode == Mode::Islanding && s.dso) add("scenario", "islanding mode must not carry a DSO attachment");
    if (s.mode == Mode::GridConnected && !s.dso) add("scenario", "grid-connected mode requires a DSO attachment");
    if (s.dso && (s.dso->mg < 0 || s.dso->mg >= n || !s.microgrids[static_cast<std::size_t>(s.dso->mg)].has_bus(s.dso->bus)))
        add("scenario", "DSO attachment references a bus outside its microgrid");

    auto check_series = [&](const std::vector<double>& v, const std::string& name) {
        if (static_cast<int>(v.size()) != s.horizon) add("prices", name + " length differs from horizon");
        if (std::any_of(v.begin(), v.end(), [](double x) { return !(x >= 0.0) || !std::isfinite(x); }))
            add("prices", name + " must be finite and nonnegative");
    };
    check_series(s.prices.c_dso, "c_dso");
    check_series(s.prices.c_loss, "c_loss");
    check_series(s.prices.kappa, "kappa");
    if (s.preferences.kappa != s.prices.kappa) add("preferences", "kappa series differs from price kappa");
    if (s.preferences.size() != n) {
        add("preferences", "matrix size differs from microgrid count");
    } else {
        for (auto& msg : check_preferences(s.preferences, s.grid_connected(), s.partners())) add("preferences", msg);
    }
    if (!(s.trade_limit > 0.0) || !(s.dso_limit > 0.0)) add("scenario", "trade limits must be positive");
    return out;
}

void require_valid(const Scenario& s) {
    auto v = validate_scenario(s);
    if (v.empty()) return;
    std::string msg = "invalid scenario:";
    for (const auto& x : v) msg += "\n  " + x.entity + ": " + x.rule;
    throw ReferenceError(msg);
}

std::string scenario_hash(const Scenario& s) {
    std::string text = scenario_to_json(s).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace prefgrid
