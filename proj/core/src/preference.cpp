#include "prefgrid/preference.hpp"

#include <cmath>
#include <numeric>

#include "prefgrid/devices.hpp"

namespace prefgrid {

std::vector<double> normalize_row(const std::vector<double>& raw) {
    double sum = 0.0;
    for (double w : raw) {
        if (w < 0.0 || !std::isfinite(w)) throw NormalizationError("normalize_row: weights must be finite and nonnegative");
        sum += w;
    }
    if (!(sum > 0.0)) throw NormalizationError("normalize_row: row has no positive entry");
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / sum;
    return out;
}

ScaledPreferences scale(const PreferenceMatrix& matrix, int hour) {
    if (hour < 0 || hour >= static_cast<int>(matrix.kappa.size())) throw DomainError("scale: hour outside horizon");
    const double k = matrix.kappa[static_cast<std::size_t>(hour)];
    ScaledPreferences out;
    out.lambda = k * matrix.lambda_prime;
    out.lambda_dso.reserve(matrix.lambda_dso_prime.size());
    for (double w : matrix.lambda_dso_prime) out.lambda_dso.push_back(k * w);
    return out;
}

namespace {

double trade_weight(int owner, int partner, const ScaledPreferences& lambda) {
    if (partner < 0) {
        if (lambda.lambda_dso.empty()) throw DomainError("preference_cost: DSO trade without DSO weights");
        return lambda.lambda_dso.at(static_cast<std::size_t>(owner));
    }
    return lambda.lambda(owner, partner);
}

double storage_term(int owner, const std::vector<StorageFlowValue>& storage, const ScaledPreferences& lambda) {
    double sum = 0.0;
    for (const auto& s : storage) {
        if (s.p_char < 0.0 || s.p_disc < 0.0) throw DomainError("preference_cost: negative storage flow");
        sum += s.p_char + s.p_disc;
    }
    return lambda.lambda(owner, owner) * sum;
}

}  // namespace

double preference_cost(int owner, const std::vector<TradeSplitValue>& trades,
                       const std::vector<StorageFlowValue>& storage, const ScaledPreferences& lambda) {
    double cost = storage_term(owner, storage, lambda);
    for (const auto& t : trades) {
        if (t.plus < 0.0 || t.minus < 0.0) throw DomainError("preference_cost: negative split part");
        cost += trade_weight(owner, t.partner, lambda) * (t.plus + t.minus);
    }
    return cost;
}

double preference_cost_abs(int owner, const std::vector<TradeSplitValue>& trades,
                           const std::vector<StorageFlowValue>& storage, const ScaledPreferences& lambda) {
    double cost = storage_term(owner, storage, lambda);
    for (const auto& t : trades) cost += trade_weight(owner, t.partner, lambda) * std::abs(t.plus - t.minus);
    return cost;
}

std::vector<std::string> check_preferences(const PreferenceMatrix& matrix, bool grid_connected,
                                           const std::vector<std::vector<int>>& partners, double tol) {
    std::vector<std::string> out;
    const int n = matrix.size();
    if (matrix.lambda_prime.cols() != n) {
        out.emplace_back("preference matrix is not square");
        return out;
    }
    if ((matrix.lambda_prime.array() < 0.0).any()) out.emplace_back("preference weights must be nonnegative");
    for (int r = 0; r < n; ++r) {
        double sum = matrix.lambda_prime(r, r);
        if (r < static_cast<int>(partners.size()))
            for (int m : partners[static_cast<std::size_t>(r)]) sum += matrix.lambda_prime(r, m);
        if (std::abs(sum - 1.0) > tol)
            out.push_back("row " + std::to_string(r) + " sums to " + std::to_string(sum) + " instead of 1");
    }
    if (grid_connected) {
        if (static_cast<int>(matrix.lambda_dso_prime.size()) != n) {
            out.emplace_back("DSO preference column missing");
        } else {
            for (int r = 0; r < n; ++r)
                if (std::abs(matrix.lambda_dso_prime[static_cast<std::size_t>(r)] - 1.0) > tol)
                    out.push_back("row " + std::to_string(r) + " has DSO weight different from 1");
        }
    } else if (!matrix.lambda_dso_prime.empty()) {
        out.emplace_back("islanded scenario carries DSO preference weights");
    }
    for (double k : matrix.kappa)
        if (!(k >= 0.0)) {
            out.emplace_back("kappa entries must be nonnegative");
            break;
        }
    return out;
}

}  // namespace prefgrid
