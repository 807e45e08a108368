#pragma once

#include <json.hpp>

#include "prefgrid/scenario.hpp"

namespace prefgrid {

inline nlohmann::json line_to_json(const LineSegment& l) {
    return {{"from", l.from_bus}, {"to", l.to_bus}, {"r", l.r},         {"x", l.x},         {"p_min", l.p_min},
            {"p_max", l.p_max},   {"q_min", l.q_min}, {"q_max", l.q_max}, {"l_max", l.l_max}};
}

// Canonical document of a scenario, used for hashing and for reports.
inline nlohmann::json scenario_to_json(const Scenario& s) {
    using nlohmann::json;
    json mgs = json::array();
    for (const auto& mg : s.microgrids) {
        json buses = json::array();
        for (const auto& b : mg.buses) buses.push_back({{"index", b.index}, {"v_min", b.v_min}, {"v_max", b.v_max}});
        json lines = json::array();
        for (const auto& l : mg.lines) lines.push_back(line_to_json(l));
        json gens = json::array();
        for (const auto& g : mg.generators)
            gens.push_back({{"bus", g.bus}, {"a", g.a}, {"b", g.b}, {"c", g.c}, {"p_min", g.p_min}, {"p_max", g.p_max},
                            {"q_min", g.q_min}, {"q_max", g.q_max}, {"ramp", g.ramp}});
        json stores = json::array();
        for (const auto& st : mg.storages)
            stores.push_back({{"bus", st.bus}, {"x_min", st.x_min}, {"x_max", st.x_max}, {"x0", st.x0},
                              {"eta_char", st.eta_char}, {"eta_disc", st.eta_disc}, {"p_char_max", st.p_char_max},
                              {"p_disc_max", st.p_disc_max}});
        json loads = json::array();
        for (const auto& nl : mg.net_loads) loads.push_back({{"bus", nl.bus}, {"p", nl.p}, {"q", nl.q}});
        mgs.push_back({{"id", mg.id},
                       {"buses", buses},
                       {"lines", lines},
                       {"generators", gens},
                       {"storages", stores},
                       {"net_load", {{"inline", loads}}}});
    }
    json edges = json::array();
    for (const auto& e : s.edges) edges.push_back({{"from_mg", e.mg_a}, {"to_mg", e.mg_b}, {"line", line_to_json(e.line)}});
    json prefs = json::array();
    for (int r = 0; r < s.preferences.size(); ++r) {
        json row = json::array();
        for (int c = 0; c < s.preferences.lambda_prime.cols(); ++c) row.push_back(s.preferences.lambda_prime(r, c));
        if (static_cast<int>(s.preferences.lambda_dso_prime.size()) > r)
            row.push_back(s.preferences.lambda_dso_prime[static_cast<std::size_t>(r)]);
        prefs.push_back(row);
    }
    json doc = {{"name", s.name},
                {"horizon", s.horizon},
                {"mode", to_string(s.mode)},
                {"trade_limit", s.trade_limit},
                {"dso_limit", s.dso_limit},
                {"terminal_soc", s.terminal_soc},
                {"microgrids", mgs},
                {"edges", edges},
                {"preferences", prefs},
                {"prices", {{"c_dso", s.prices.c_dso}, {"c_loss", s.prices.c_loss}, {"kappa", s.prices.kappa}}}};
    if (s.dso) doc["dso"] = {{"mg", s.dso->mg}, {"bus", s.dso->bus}};
    return doc;
}

}  // namespace prefgrid
