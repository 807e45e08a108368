#pragma once

#include <string>
#include <vector>

#include "prefgrid/coordinator.hpp"
#include "prefgrid/reference_solver.hpp"

namespace prefgrid {

struct AuditTolerances {
    double balance = 1e-7;
    double consensus = 1e-4;
    double split = 1e-8;
    double storage = 1e-8;
    double cone = 1e-7;
    double exactness = 1e-5;  // reported, never a failure
};

struct AuditReport {
    double balance = 0.0;      // largest nodal or link-row residual, MW / MVAr
    double consensus = 0.0;    // largest |p_nm + p_mn| or |Y_n - Y_m|
    double split = 0.0;        // largest min(p+, p-)
    double storage = 0.0;      // largest min(p_char, p_disc)
    double cone = 0.0;         // largest relative cone violation
    double exactness_gap = 0.0;
    std::size_t inexact_lines = 0;  // line-hours above the exactness threshold
    std::vector<std::string> failures;

    bool passed() const { return failures.empty(); }
    bool exact() const { return inexact_lines == 0; }
};

struct AuditBlock {
    const ConicProgram* program = nullptr;
    const MicrogridVariables* vars = nullptr;
    const Vector* x = nullptr;
    const std::vector<SharedSlot>* shared = nullptr;
};

AuditReport audit_solution(const Scenario& scenario, const std::vector<AuditBlock>& blocks,
                           const AuditTolerances& tol = {});
AuditReport audit_solution(const Scenario& scenario, const AdmmResult& result, const AuditTolerances& tol = {});
AuditReport audit_solution(const Scenario& scenario, const CentralizedResult& result, const AuditTolerances& tol = {});

// Link-row residual of one microgrid computed from its variables, per hour.
std::vector<double> link_residuals(const MicrogridVariables& vars, const Vector& x);

}  // namespace prefgrid
