#pragma once

#include <cmath>
#include <limits>

// Exhaustive search for the two-microgrid fixture in data/two_mg.json:
// buses 0-1 (MG0) and 2-3 (MG1), purely resistive lines, bus 0 held at 1 p.u.
// The edge flow tau from bus 1 to bus 2 fixes every other quantity.
namespace toy {

struct Point {
    double tau = 0.0;
    double gen0 = 0.0;
    double gen1 = 0.0;
    double cost = std::numeric_limits<double>::infinity();
};

inline constexpr double kR01 = 0.01, kR12 = 0.02, kR23 = 0.01;
inline constexpr double kLoad1 = 0.1, kLoad3 = 0.3;
inline constexpr double kKappa = 10.0;

// Sending-end flow P with P - r P^2 / v = delivered.
inline double sending(double r, double v, double delivered) {
    const double k = r / v;
    if (std::abs(k) < 1e-15) return delivered;
    const double disc = 1.0 - 4.0 * k * delivered;
    if (disc < 0) return std::numeric_limits<double>::quiet_NaN();
    return (1.0 - std::sqrt(disc)) / (2.0 * k);
}

inline Point evaluate(double tau) {
    Point pt;
    pt.tau = tau;
    // MG0: bus 1 consumes the load and sends tau over the edge.
    const double p01 = sending(kR01, 1.0, kLoad1 + tau);
    if (std::isnan(p01)) return pt;
    const double l01 = p01 * p01;
    const double v1 = 1.0 - 2.0 * kR01 * p01 + kR01 * kR01 * l01;
    const double l12 = tau * tau / v1;
    const double v2 = v1 - 2.0 * kR12 * tau + kR12 * kR12 * l12;
    const double p23 = sending(kR23, v2, kLoad3);
    if (std::isnan(p23)) return pt;
    const double l23 = p23 * p23 / v2;
    pt.gen0 = p01;
    pt.gen1 = p23 - (tau - kR12 * l12);
    if (pt.gen0 < 0 || pt.gen0 > 0.5 || pt.gen1 < 0 || pt.gen1 > 0.5) return pt;
    for (double v : {v1, v2, v2 - 2.0 * kR23 * p23 + kR23 * kR23 * l23})
        if (v < 0.81 || v > 1.21) return pt;
    const double generation = 50.0 * pt.gen0 * pt.gen0 + 20.0 * pt.gen0 + 50.0 * pt.gen1 * pt.gen1 + 50.0 * pt.gen1;
    const double losses = kKappa * (kR01 * l01 + kR12 * l12 + kR23 * l23);
    const double preference = 2.0 * 0.5 * kKappa * std::abs(tau);
    pt.cost = generation + losses + preference;
    return pt;
}

// Grid over the edge flow in 0.001 MW steps, then a local refinement.
inline Point search() {
    Point best;
    for (int i = -500; i <= 500; ++i) {
        const Point p = evaluate(i * 1e-3);
        if (p.cost < best.cost) best = p;
    }
    const double centre = best.tau;
    for (int i = -1000; i <= 1000; ++i) {
        const Point p = evaluate(centre + i * 1e-6);
        if (p.cost < best.cost) best = p;
    }
    return best;
}

}  // namespace toy
