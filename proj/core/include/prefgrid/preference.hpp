#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace prefgrid {

class NormalizationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Normalized weights: lambda_prime(n, m) for counterparties, lambda_prime(n, n)
// for local storage throughput, plus the DSO column kept outside the
// normalization.
struct PreferenceMatrix {
    Eigen::MatrixXd lambda_prime;
    std::vector<double> lambda_dso_prime;  // empty when islanded
    std::vector<double> kappa;             // $/MWh per hour

    int size() const { return static_cast<int>(lambda_prime.rows()); }
};

std::vector<double> normalize_row(const std::vector<double>& raw);

struct ScaledPreferences {
    Eigen::MatrixXd lambda;  // $/MWh
    std::vector<double> lambda_dso;
};

ScaledPreferences scale(const PreferenceMatrix& matrix, int hour);

// Split parts of one signed trade; partner < 0 denotes the DSO.
struct TradeSplitValue {
    int partner = -1;
    double plus = 0.0;
    double minus = 0.0;
};

struct StorageFlowValue {
    double p_char = 0.0;
    double p_disc = 0.0;
};

// lambda_DSO (p+ + p-)_DSO + lambda_nn sum(p_char + p_disc) + sum_m lambda_nm (p+ + p-)_nm
double preference_cost(int owner, const std::vector<TradeSplitValue>& trades,
                       const std::vector<StorageFlowValue>& storage, const ScaledPreferences& lambda);

// Same weights applied to |p| instead of the split parts.
double preference_cost_abs(int owner, const std::vector<TradeSplitValue>& trades,
                           const std::vector<StorageFlowValue>& storage, const ScaledPreferences& lambda);

// Row sums over `partners` plus the diagonal, nonnegativity and the DSO column.
std::vector<std::string> check_preferences(const PreferenceMatrix& matrix, bool grid_connected,
                                           const std::vector<std::vector<int>>& partners, double tol = 1e-9);

}  // namespace prefgrid
