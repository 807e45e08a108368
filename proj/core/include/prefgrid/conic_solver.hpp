#pragma once

#include <memory>
#include <string>

#include "prefgrid/program.hpp"

namespace prefgrid {

enum class SolveStatus { Optimal, Infeasible, NumericalLimit };

const char* to_string(SolveStatus status);

struct SolverSettings {
    double feastol = 1e-9;      // scaled primal/dual residual target
    double mu_tol = 1e-11;      // mean complementarity s'z / degree, objective-scaled
    double infeas_tol = 1e-9;   // Farkas certificate residual
    double regularization = 1e-10;
    int max_iter = 120;
    int refine_steps = 3;
    double step_fraction = 0.99;
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalLimit;
    bool reduced_accuracy = false;
    Vector x;
    Vector y;  // equality multipliers
    Vector z;  // cone multipliers
    Vector s;  // cone slacks
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double mean_complementarity = 0.0;
};

// Primal-dual interior point method with Nesterov-Todd scaling and Mehrotra
// correction. The KKT pattern is analysed once and reused for every solve, so
// the linear cost and a diagonal shift of P may change between solves.
class ConicSolver {
public:
    explicit ConicSolver(ConicProblem problem, SolverSettings settings = {});
    ~ConicSolver();
    ConicSolver(ConicSolver&&) noexcept;
    ConicSolver& operator=(ConicSolver&&) noexcept;

    const ConicProblem& problem() const;
    void set_linear_cost(const Vector& q);
    void set_constant_cost(double c);
    // Adds diag(shift) to P for subsequent solves (replaces any previous shift).
    void set_diagonal_shift(const Vector& shift);
    SolveResult solve();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SolveResult solve_conic(const ConicProblem& problem, const SolverSettings& settings = {});

struct KktReport {
    double equality_residual = 0.0;    // ||Ax - b||_inf
    double cone_residual = 0.0;        // distance of h - Gx outside the cone, per block max
    double dual_cone_residual = 0.0;   // same for z
    double stationarity = 0.0;         // ||Px + q + A'y + G'z||_inf / (1 + ||q||_inf)
    double complementarity = 0.0;      // |z'(h - Gx)|
    double duality_gap = 0.0;          // |primal - dual| / (1 + |primal|)
};

KktReport kkt_report(const ConicProblem& problem, const SolveResult& solution);

}  // namespace prefgrid
