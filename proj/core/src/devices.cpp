#include "prefgrid/devices.hpp"

#include <string>

namespace prefgrid {

double fg_cost(const FuelGenerator& g, double p) {
    if (p < g.p_min || p > g.p_max) throw DomainError("fg_cost: output outside generator limits");
    return 0.5 * g.a * g.a * p * p + g.b * p + g.c;
}

double storage_step(const StorageUnit& s, double x, double p_char, double p_disc) {
    if (p_char < 0.0 || p_disc < 0.0) throw DomainError("storage_step: negative charge or discharge power");
    return x + s.eta_char * p_char - s.eta_disc * p_disc;
}

DeviceVars device_constraints(ConicProgram& prog, const std::vector<FuelGenerator>& generators,
                              const std::vector<StorageUnit>& storages, int horizon, const DeviceOptions& options) {
    DeviceVars v;
    for (const auto& g : generators) {
        std::vector<int> p(static_cast<std::size_t>(horizon));
        std::vector<int> q(static_cast<std::size_t>(horizon));
        for (int t = 0; t < horizon; ++t) {
            p[static_cast<std::size_t>(t)] = prog.add_var(g.p_min, g.p_max);
            q[static_cast<std::size_t>(t)] = prog.add_var(g.q_min, g.q_max);
        }
        for (int t = 0; t + 1 < horizon; ++t) {
            LinExpr diff = LinExpr::var(p[static_cast<std::size_t>(t) + 1]) - LinExpr::var(p[static_cast<std::size_t>(t)]);
            prog.add_less_equal(diff, g.ramp, RowTag::GeneratorRamp);
            prog.add_less_equal(-diff, g.ramp, RowTag::GeneratorRamp);
        }
        v.p_gen.push_back(std::move(p));
        v.q_gen.push_back(std::move(q));
    }
    for (const auto& s : storages) {
        std::vector<int> pc(static_cast<std::size_t>(horizon));
        std::vector<int> pd(static_cast<std::size_t>(horizon));
        std::vector<int> x(static_cast<std::size_t>(horizon));
        for (int t = 0; t < horizon; ++t) {
            auto i = static_cast<std::size_t>(t);
            pc[i] = prog.add_var(0.0, s.p_char_max);
            pd[i] = prog.add_var(0.0, s.p_disc_max);
            x[i] = prog.add_var(s.x_min, s.x_max);
            LinExpr prev = t == 0 ? LinExpr(s.x0) : LinExpr::var(x[i - 1]);
            LinExpr next = prev + LinExpr::var(pc[i], s.eta_char) - LinExpr::var(pd[i], s.eta_disc);
            prog.add_equality(LinExpr::var(x[i]), next, RowTag::StorageDynamics);
        }
        if (options.terminal_soc && horizon > 0)
            prog.add_equality(LinExpr::var(x.back()), s.x0, RowTag::StorageTerminal);
        v.p_char.push_back(std::move(pc));
        v.p_disc.push_back(std::move(pd));
        v.soc.push_back(std::move(x));
    }
    return v;
}

void add_generation_cost(ConicProgram& prog, const std::vector<FuelGenerator>& generators, const DeviceVars& vars) {
    for (std::size_t k = 0; k < generators.size(); ++k) {
        const auto& g = generators[k];
        for (int idx : vars.p_gen[k]) {
            prog.add_squared_cost(LinExpr::var(idx), 0.5 * g.a * g.a);
            prog.add_linear_cost(idx, g.b);
            prog.add_constant_cost(g.c);
        }
    }
}

std::vector<std::string> check_generator(const FuelGenerator& g) {
    std::vector<std::string> out;
    if (g.a < 0.0 || g.b < 0.0 || g.c < 0.0) out.emplace_back("cost coefficients must be nonnegative");
    if (g.p_min > g.p_max) out.emplace_back("p_min exceeds p_max");
    if (g.q_min > g.q_max) out.emplace_back("q_min exceeds q_max");
    if (g.ramp < 0.0) out.emplace_back("negative ramp limit");
    return out;
}

std::vector<std::string> check_storage(const StorageUnit& s) {
    std::vector<std::string> out;
    if (!(0.0 <= s.x_min && s.x_min <= s.x0 && s.x0 <= s.x_max))
        out.emplace_back("state bounds must satisfy 0 <= x_min <= x0 <= x_max");
    if (!(s.eta_char > 0.0 && s.eta_char <= 1.0) || !(s.eta_disc > 0.0 && s.eta_disc <= 1.0))
        out.emplace_back("efficiencies must lie in (0, 1]");
    if (s.p_char_max < 0.0 || s.p_disc_max < 0.0) out.emplace_back("negative power limit");
    return out;
}

}  // namespace prefgrid
