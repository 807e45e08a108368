#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefgrid/devices.hpp"
#include "prefgrid/preference.hpp"

namespace prefgrid {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ReferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { GridConnected, Islanding };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct Bus {
    int index = 0;
    double v_min = 0.81;  // squared voltage, p.u.
    double v_max = 1.21;
};

struct LineSegment {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;  // p.u.
    double x = 0.0;
    double p_min = -2.0;
    double p_max = 2.0;
    double q_min = -2.0;
    double q_max = 2.0;
    double l_max = 10.0;  // squared current, p.u.
};

struct NetLoad {
    int bus = 0;
    std::vector<double> p;  // MW per hour
    std::vector<double> q;  // MVAr per hour
};

struct MicrogridModel {
    int id = 0;
    std::vector<Bus> buses;
    std::vector<LineSegment> lines;
    std::vector<FuelGenerator> generators;
    std::vector<StorageUnit> storages;
    std::vector<NetLoad> net_loads;
    std::vector<int> boundary_buses;

    bool has_bus(int bus) const;
};

// Inter-microgrid line, stored once per unordered pair with mg_a < mg_b.
struct InterEdge {
    int mg_a = 0;
    int mg_b = 0;
    LineSegment line;
};

struct PriceSeries {
    std::vector<double> c_dso;
    std::vector<double> c_loss;
    std::vector<double> kappa;
};

struct DsoAttachment {
    int mg = 0;
    int bus = 0;
};

struct Scenario {
    std::string name;
    std::vector<MicrogridModel> microgrids;
    std::vector<InterEdge> edges;
    int horizon = 24;
    Mode mode = Mode::GridConnected;
    PriceSeries prices;
    PreferenceMatrix preferences;
    std::optional<DsoAttachment> dso;
    double trade_limit = 2.0;  // |p_nm|, |q_nm| bound, MW / MVAr
    double dso_limit = 5.0;
    bool terminal_soc = false;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(microgrids.size()); }
    bool grid_connected() const { return mode == Mode::GridConnected; }
    // Trading partners of each microgrid: every other microgrid reachable over edges.
    std::vector<std::vector<int>> partners() const;
    // Microgrid-level connected components, each sorted.
    std::vector<std::vector<int>> components() const;
    // Microgrids whose buses host an end of edge e: parent owns line.from_bus.
    int parent_of(const InterEdge& e) const;
    int child_of(const InterEdge& e) const;
    int owner_of_bus(int bus) const;
};

struct KappaSpec {
    enum class Kind { Fixed, Uniform } kind = Kind::Fixed;
    double value = 60.0;
    double low = 20.0;
    double high = 100.0;
    std::uint64_t seed = 7;

    static KappaSpec fixed(double v);
    static KappaSpec uniform(std::uint64_t seed, double low = 20.0, double high = 100.0);
    // "60" or "random:<seed>"
    static KappaSpec parse(const std::string& text);
    std::string label() const;
};

std::vector<double> kappa_series(const KappaSpec& spec, int horizon);

Scenario load_scenario(const std::string& document, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);

struct Violation {
    std::string entity;
    std::string rule;
};

std::vector<Violation> validate_scenario(const Scenario& s);

// Throws ReferenceError listing every violation.
void require_valid(const Scenario& s);

enum class PreferenceCase { Case0 = 0, Case1 = 1, Case2 = 2 };

// Built-in IEEE 33-bus feeder split into eight microgrids.
Scenario build_ieee33_case(PreferenceCase pref, Mode mode, const KappaSpec& kappa, std::uint64_t profile_seed = 7,
                           int horizon = 24);

struct Profiles {
    std::vector<std::vector<double>> p_net;  // [bus][hour]
    std::vector<std::vector<double>> q_net;
    PriceSeries prices;
};

// Synthetic diurnal net loads for the built-in feeder and a uniform kappa in [20, 100].
Profiles generate_profiles(std::uint64_t seed, int horizon);

std::string scenario_hash(const Scenario& s);

}  // namespace prefgrid
