#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace prefgrid {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

struct LinTerm {
    int var;
    double coef;
};

// Affine expression sum(coef * x[var]) + constant.
class LinExpr {
public:
    LinExpr() = default;
    LinExpr(double constant) : constant_(constant) {}  // NOLINT(implicit)
    static LinExpr var(int index, double coef = 1.0);

    LinExpr& add(int index, double coef);
    LinExpr& operator+=(const LinExpr& other);
    LinExpr& operator-=(const LinExpr& other);
    LinExpr& operator*=(double factor);

    const std::vector<LinTerm>& terms() const { return terms_; }
    double constant() const { return constant_; }
    double evaluate(const Vector& x) const;
    bool empty() const { return terms_.empty(); }

private:
    std::vector<LinTerm> terms_;
    double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double k, LinExpr a);
LinExpr operator-(LinExpr a);

enum class RowTag {
    Bound,
    GeneratorRamp,
    StorageDynamics,
    StorageInitial,
    StorageTerminal,
    ActiveBalance,
    ReactiveBalance,
    VoltageDrop,
    ReferenceVoltage,
    TradeSplit,
    TradeLink,
    Consensus,
    Other,
    Count
};

const char* to_string(RowTag tag);

// One constraint row as the builder recorded it: expr == 0 or expr <= 0.
struct LinearRow {
    LinExpr expr;
    bool equality;
    RowTag tag;
};

// ||(w_1..w_k)||_2 <= t, written in terms of affine expressions.
struct ConeRow {
    LinExpr t;
    std::vector<LinExpr> w;
};

// Canonical form consumed by the interior-point solver:
//   minimize 0.5 x'Px + q'x + constant
//   subject to A x = b, G x + s = h, s in R+^l x Q^{k_1} x ... x Q^{k_m}
struct ConicProblem {
    int num_vars = 0;
    SparseMatrix P;  // full symmetric storage
    Vector q;
    double constant = 0.0;
    SparseMatrix A;
    Vector b;
    SparseMatrix G;
    Vector h;
    int num_nonneg = 0;
    std::vector<int> soc_dims;

    int num_cone_rows() const { return static_cast<int>(h.size()); }
    int degree() const { return num_nonneg + static_cast<int>(soc_dims.size()); }
    double objective(const Vector& x) const;
};

class ConicProgram {
public:
    int add_var(double lower = -kInf, double upper = kInf);
    int num_vars() const { return static_cast<int>(lower_.size()); }
    void set_bounds(int var, double lower, double upper);
    double lower(int var) const { return lower_[static_cast<std::size_t>(var)]; }
    double upper(int var) const { return upper_[static_cast<std::size_t>(var)]; }

    void add_linear_cost(int var, double coef);
    void add_linear_cost(const LinExpr& e);
    // Adds weight * e^2 to the objective; weight must be nonnegative.
    void add_squared_cost(const LinExpr& e, double weight);
    void add_constant_cost(double value) { constant_ += value; }

    int add_equality(const LinExpr& lhs, const LinExpr& rhs, RowTag tag);
    int add_less_equal(const LinExpr& lhs, const LinExpr& rhs, RowTag tag);
    int add_soc(const LinExpr& t, std::vector<LinExpr> w);
    // w'w <= x*y with x, y >= 0.
    int add_rotated_soc(const LinExpr& x, const LinExpr& y, const std::vector<LinExpr>& w);

    const std::vector<LinearRow>& rows() const { return rows_; }
    const std::vector<ConeRow>& cones() const { return cones_; }
    std::size_t count(RowTag tag) const;

    double objective(const Vector& x) const;
    // Largest violation over bounds, linear rows and cones at x.
    double max_violation(const Vector& x) const;
    double max_violation(const Vector& x, RowTag tag) const;

    ConicProblem compile() const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<Eigen::Triplet<double>> quad_;
    std::vector<double> linear_;
    double constant_ = 0.0;
    std::vector<LinearRow> rows_;
    std::vector<ConeRow> cones_;
};

}  // namespace prefgrid
