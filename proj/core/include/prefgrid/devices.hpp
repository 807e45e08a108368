#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "prefgrid/program.hpp"

namespace prefgrid {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Cost 0.5*a^2*p^2 + b*p + c in $/h for p in MW.
struct FuelGenerator {
    int bus = 0;
    double a = 0.6;
    double b = 40.0;
    double c = 0.0;
    double p_min = 0.0;
    double p_max = 0.3;
    double q_min = -0.3;
    double q_max = 0.3;
    double ramp = 0.1;  // MW/h
};

struct StorageUnit {
    int bus = 0;
    double x_min = 0.0;  // MWh
    double x_max = 0.2;
    double x0 = 0.1;
    double eta_char = 0.9;
    double eta_disc = 0.9;
    double p_char_max = 0.2;  // MW
    double p_disc_max = 0.2;
};

double fg_cost(const FuelGenerator& g, double p);

// x + eta_char*p_char - eta_disc*p_disc, unclamped.
double storage_step(const StorageUnit& s, double x, double p_char, double p_disc);

// Variable indices of one microgrid's devices, indexed [device][hour].
struct DeviceVars {
    std::vector<std::vector<int>> p_gen;
    std::vector<std::vector<int>> q_gen;
    std::vector<std::vector<int>> p_char;
    std::vector<std::vector<int>> p_disc;
    std::vector<std::vector<int>> soc;
};

struct DeviceOptions {
    bool terminal_soc = false;  // x at the last hour equals x0
};

// Adds device variables with their boxes, ramp pairs between consecutive
// hours and storage dynamics chained from x0.
DeviceVars device_constraints(ConicProgram& prog, const std::vector<FuelGenerator>& generators,
                              const std::vector<StorageUnit>& storages, int horizon,
                              const DeviceOptions& options = {});

// Adds the generator cost of every hour to the objective.
void add_generation_cost(ConicProgram& prog, const std::vector<FuelGenerator>& generators, const DeviceVars& vars);

std::vector<std::string> check_generator(const FuelGenerator& g);
std::vector<std::string> check_storage(const StorageUnit& s);

}  // namespace prefgrid
