#include <algorithm>
#include <cmath>
#include <random>
#include <string_view>

#include <json.hpp>

#include "prefgrid/scenario.hpp"

namespace prefgrid {

namespace detail {
extern const std::string_view kIeee33Document;
}

double unit_uniform(std::mt19937_64& rng);

namespace {

using nlohmann::json;

const json& document() {
    static const json doc = json::parse(detail::kIeee33Document);
    return doc;
}

double load_shape(double h) {
    return 0.55 + 0.25 * std::exp(-(h - 12.5) * (h - 12.5) / 18.0) + 0.45 * std::exp(-(h - 19.5) * (h - 19.5) / 8.0);
}

double solar_shape(double h) {
    if (h < 6.0 || h > 18.0) return 0.0;
    return std::max(0.0, std::sin(M_PI * (h - 6.0) / 12.0));
}

}  // namespace

Profiles generate_profiles(std::uint64_t seed, int horizon) {
    const json& doc = document();
    const int buses = doc["buses"].get<int>();
    const json& prof = doc["profile"];
    const double scale = prof["load_scale"].get<double>();
    const double noise = prof["noise"].get<double>();
    const double pv_share = prof["pv_share"].get<double>();
    const double peak_fraction = prof["peak_fraction_of_generation"].get<double>();
    const auto H = static_cast<std::size_t>(std::max(0, horizon));

    Profiles out;
    out.p_net.assign(static_cast<std::size_t>(buses), std::vector<double>(H, 0.0));
    out.q_net = out.p_net;
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    for (const auto& bl : doc["base_loads"]) {
        const auto b = bl["bus"].get<std::size_t>();
        const double p0 = bl["p_mw"].get<double>() * scale;
        const double q0 = bl["q_mvar"].get<double>() * scale;
        for (std::size_t t = 0; t < H; ++t) {
            const double h = static_cast<double>(t % 24);
            const double factor = load_shape(h) * (1.0 + noise * (2.0 * unit_uniform(rng) - 1.0));
            out.p_net[b][t] = p0 * factor - pv_share * p0 * solar_shape(h);
            out.q_net[b][t] = q0 * factor;
        }
    }

    const json& partition = doc["partition"];
    for (std::size_t m = 0; m < partition.size(); ++m) {
        double capacity = 0.0;
        for (const auto& g : doc["generators"])
            if (g["mg"].get<std::size_t>() == m) capacity += g["p_max"].get<double>();
        double peak = 0.0;
        for (std::size_t t = 0; t < H; ++t) {
            double total = 0.0;
            for (const auto& b : partition[m]) total += out.p_net[b.get<std::size_t>()][t];
            peak = std::max(peak, total);
        }
        if (peak > peak_fraction * capacity) {
            const double k = peak_fraction * capacity / peak;
            for (const auto& b : partition[m])
                for (std::size_t t = 0; t < H; ++t) {
                    out.p_net[b.get<std::size_t>()][t] *= k;
                    out.q_net[b.get<std::size_t>()][t] *= k;
                }
        }
    }

    out.prices.kappa = kappa_series(KappaSpec::uniform(seed), horizon);
    out.prices.c_dso = out.prices.kappa;
    out.prices.c_loss = out.prices.kappa;
    return out;
}

Scenario build_ieee33_case(PreferenceCase pref, Mode mode, const KappaSpec& kappa, std::uint64_t profile_seed,
                           int horizon) {
    if (horizon < 1) throw DomainError("build_ieee33_case: horizon must be at least 1");
    const json& doc = document();
    const json& partition = doc["partition"];
    const double vmin = doc["voltage_bounds"][0].get<double>();
    const double vmax = doc["voltage_bounds"][1].get<double>();
    const json& limits = doc["line_limits"];

    Scenario s;
    s.name = doc["name"].get<std::string>() + "-case" + std::to_string(static_cast<int>(pref)) + "-" + to_string(mode);
    s.horizon = horizon;
    s.mode = mode;
    s.seed = profile_seed;

    const Profiles profiles = generate_profiles(profile_seed, horizon);
    for (std::size_t m = 0; m < partition.size(); ++m) {
        MicrogridModel mg;
        mg.id = static_cast<int>(m);
        for (const auto& b : partition[m]) {
            Bus bus;
            bus.index = b.get<int>();
            bus.v_min = vmin * vmin;
            bus.v_max = vmax * vmax;
            mg.buses.push_back(bus);
            NetLoad nl;
            nl.bus = bus.index;
            nl.p = profiles.p_net[static_cast<std::size_t>(bus.index)];
            nl.q = profiles.q_net[static_cast<std::size_t>(bus.index)];
            mg.net_loads.push_back(std::move(nl));
        }
        for (const auto& g : doc["generators"]) {
            if (g["mg"].get<std::size_t>() != m) continue;
            FuelGenerator fg;
            fg.bus = g["bus"].get<int>();
            fg.a = g["a"].get<double>();
            fg.b = g["b"].get<double>();
            fg.c = g["c"].get<double>();
            fg.p_min = g["p_min"].get<double>();
            fg.p_max = g["p_max"].get<double>();
            fg.q_min = g["q_min"].get<double>();
            fg.q_max = g["q_max"].get<double>();
            fg.ramp = g["ramp"].get<double>();
            mg.generators.push_back(fg);
        }
        for (const auto& st : doc["storages"]) {
            if (st["mg"].get<std::size_t>() != m) continue;
            StorageUnit su;
            su.bus = st["bus"].get<int>();
            su.x_min = st["x_min"].get<double>();
            su.x_max = st["x_max"].get<double>();
            su.x0 = 0.5 * su.x_max;
            su.eta_char = st["eta_char"].get<double>();
            su.eta_disc = st["eta_disc"].get<double>();
            su.p_char_max = st["p_char_max"].get<double>();
            su.p_disc_max = st["p_disc_max"].get<double>();
            mg.storages.push_back(su);
        }
        s.microgrids.push_back(std::move(mg));
    }

    for (const auto& jl : doc["lines"]) {
        LineSegment l;
        l.from_bus = jl["from"].get<int>();
        l.to_bus = jl["to"].get<int>();
        l.r = jl["r"].get<double>();
        l.x = jl["x"].get<double>();
        l.p_max = limits["p_mw"].get<double>();
        l.p_min = -l.p_max;
        l.q_max = limits["q_mvar"].get<double>();
        l.q_min = -l.q_max;
        l.l_max = limits["l_max"].get<double>();
        const int a = s.owner_of_bus(l.from_bus);
        const int b = s.owner_of_bus(l.to_bus);
        if (a == b) {
            s.microgrids[static_cast<std::size_t>(a)].lines.push_back(l);
        } else {
            InterEdge e;
            e.mg_a = std::min(a, b);
            e.mg_b = std::max(a, b);
            e.line = l;
            s.edges.push_back(e);
        }
    }

    if (mode == Mode::GridConnected) {
        DsoAttachment d;
        d.bus = doc["dso_bus"].get<int>();
        d.mg = s.owner_of_bus(d.bus);
        s.dso = d;
    }

    s.prices.kappa = kappa_series(kappa, horizon);
    s.prices.c_dso = s.prices.kappa;
    s.prices.c_loss = s.prices.kappa;

    const json& rows = doc["preference_cases"][static_cast<std::size_t>(pref)];
    const int n = s.size();
    s.preferences.kappa = s.prices.kappa;
    s.preferences.lambda_prime = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            s.preferences.lambda_prime(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    if (mode == Mode::GridConnected)
        for (int r = 0; r < n; ++r)
            s.preferences.lambda_dso_prime.push_back(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(n)].get<double>());

    for (const auto& e : s.edges)
        for (int bus : {e.line.from_bus, e.line.to_bus})
            s.microgrids[static_cast<std::size_t>(s.owner_of_bus(bus))].boundary_buses.push_back(bus);
    if (s.dso) s.microgrids[static_cast<std::size_t>(s.dso->mg)].boundary_buses.push_back(s.dso->bus);
    for (auto& mg : s.microgrids) {
        std::sort(mg.boundary_buses.begin(), mg.boundary_buses.end());
        mg.boundary_buses.erase(std::unique(mg.boundary_buses.begin(), mg.boundary_buses.end()), mg.boundary_buses.end());
    }
    return s;
}

}  // namespace prefgrid
