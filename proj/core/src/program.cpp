#include "prefgrid/program.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prefgrid {

namespace {

std::vector<LinTerm> merged(const LinExpr& e) {
    std::vector<LinTerm> t = e.terms();
    std::sort(t.begin(), t.end(), [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
    std::vector<LinTerm> out;
    out.reserve(t.size());
    for (const auto& term : t) {
        if (!out.empty() && out.back().var == term.var) {
            out.back().coef += term.coef;
        } else {
            out.push_back(term);
        }
    }
    std::erase_if(out, [](const LinTerm& x) { return x.coef == 0.0; });
    return out;
}

double cone_violation(const ConeRow& c, const Vector& x) {
    double t = c.t.evaluate(x);
    double nrm = 0.0;
    for (const auto& w : c.w) {
        double v = w.evaluate(x);
        nrm += v * v;
    }
    return std::max(0.0, std::sqrt(nrm) - t);
}

}  // namespace

LinExpr LinExpr::var(int index, double coef) {
    LinExpr e;
    e.terms_.push_back({index, coef});
    return e;
}

LinExpr& LinExpr::add(int index, double coef) {
    terms_.push_back({index, coef});
    return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    constant_ += other.constant_;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
    for (const auto& t : other.terms_) terms_.push_back({t.var, -t.coef});
    constant_ -= other.constant_;
    return *this;
}

LinExpr& LinExpr::operator*=(double factor) {
    for (auto& t : terms_) t.coef *= factor;
    constant_ *= factor;
    return *this;
}

double LinExpr::evaluate(const Vector& x) const {
    double v = constant_;
    for (const auto& t : terms_) v += t.coef * x[t.var];
    return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double k, LinExpr a) { return a *= k; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }

const char* to_string(RowTag tag) {
    switch (tag) {
        case RowTag::Bound: return "bound";
        case RowTag::GeneratorRamp: return "generator-ramp";
        case RowTag::StorageDynamics: return "storage-dynamics";
        case RowTag::StorageInitial: return "storage-initial";
        case RowTag::StorageTerminal: return "storage-terminal";
        case RowTag::ActiveBalance: return "active-balance";
        case RowTag::ReactiveBalance: return "reactive-balance";
        case RowTag::VoltageDrop: return "voltage-drop";
        case RowTag::ReferenceVoltage: return "reference-voltage";
        case RowTag::TradeSplit: return "trade-split";
        case RowTag::TradeLink: return "trade-link";
        case RowTag::Consensus: return "consensus";
        case RowTag::Other: return "other";
        case RowTag::Count: break;
    }
    return "unknown";
}

double ConicProblem::objective(const Vector& x) const {
    return 0.5 * x.dot(P * x) + q.dot(x) + constant;
}

int ConicProgram::add_var(double lower, double upper) {
    if (lower > upper) throw std::invalid_argument("add_var: lower bound exceeds upper bound");
    lower_.push_back(lower);
    upper_.push_back(upper);
    linear_.push_back(0.0);
    return static_cast<int>(lower_.size()) - 1;
}

void ConicProgram::set_bounds(int var, double lower, double upper) {
    if (lower > upper) throw std::invalid_argument("set_bounds: lower bound exceeds upper bound");
    lower_.at(static_cast<std::size_t>(var)) = lower;
    upper_.at(static_cast<std::size_t>(var)) = upper;
}

void ConicProgram::add_linear_cost(int var, double coef) {
    linear_.at(static_cast<std::size_t>(var)) += coef;
}

void ConicProgram::add_linear_cost(const LinExpr& e) {
    for (const auto& t : e.terms()) add_linear_cost(t.var, t.coef);
    constant_ += e.constant();
}

void ConicProgram::add_squared_cost(const LinExpr& e, double weight) {
    if (weight < 0.0) throw std::invalid_argument("add_squared_cost: negative weight");
    if (weight == 0.0) return;
    auto t = merged(e);
    double c = e.constant();
    for (const auto& a : t) {
        for (const auto& b : t) quad_.emplace_back(a.var, b.var, 2.0 * weight * a.coef * b.coef);
        linear_[static_cast<std::size_t>(a.var)] += 2.0 * weight * c * a.coef;
    }
    constant_ += weight * c * c;
}

int ConicProgram::add_equality(const LinExpr& lhs, const LinExpr& rhs, RowTag tag) {
    rows_.push_back({lhs - rhs, true, tag});
    return static_cast<int>(rows_.size()) - 1;
}

int ConicProgram::add_less_equal(const LinExpr& lhs, const LinExpr& rhs, RowTag tag) {
    rows_.push_back({lhs - rhs, false, tag});
    return static_cast<int>(rows_.size()) - 1;
}

int ConicProgram::add_soc(const LinExpr& t, std::vector<LinExpr> w) {
    cones_.push_back({t, std::move(w)});
    return static_cast<int>(cones_.size()) - 1;
}

int ConicProgram::add_rotated_soc(const LinExpr& x, const LinExpr& y, const std::vector<LinExpr>& w) {
    std::vector<LinExpr> parts;
    parts.reserve(w.size() + 1);
    parts.push_back(x - y);
    for (const auto& e : w) parts.push_back(2.0 * e);
    return add_soc(x + y, std::move(parts));
}

std::size_t ConicProgram::count(RowTag tag) const {
    return static_cast<std::size_t>(
        std::count_if(rows_.begin(), rows_.end(), [tag](const LinearRow& r) { return r.tag == tag; }));
}

double ConicProgram::objective(const Vector& x) const {
    double v = constant_;
    for (std::size_t i = 0; i < linear_.size(); ++i) v += linear_[i] * x[static_cast<Eigen::Index>(i)];
    for (const auto& t : quad_) v += 0.5 * t.value() * x[t.row()] * x[t.col()];
    return v;
}

double ConicProgram::max_violation(const Vector& x) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        double xi = x[static_cast<Eigen::Index>(i)];
        worst = std::max({worst, lower_[i] - xi, xi - upper_[i]});
    }
    for (const auto& r : rows_) {
        double v = r.expr.evaluate(x);
        worst = std::max(worst, r.equality ? std::abs(v) : v);
    }
    for (const auto& c : cones_) worst = std::max(worst, cone_violation(c, x));
    return worst;
}

double ConicProgram::max_violation(const Vector& x, RowTag tag) const {
    double worst = 0.0;
    for (const auto& r : rows_) {
        if (r.tag != tag) continue;
        double v = r.expr.evaluate(x);
        worst = std::max(worst, r.equality ? std::abs(v) : v);
    }
    return worst;
}

ConicProblem ConicProgram::compile() const {
    ConicProblem out;
    const int n = num_vars();
    out.num_vars = n;
    out.P.resize(n, n);
    out.P.setFromTriplets(quad_.begin(), quad_.end());
    out.P.makeCompressed();
    out.q = Eigen::Map<const Vector>(linear_.data(), n);
    out.constant = constant_;

    std::vector<Eigen::Triplet<double>> at;
    std::vector<double> bv;
    std::vector<Eigen::Triplet<double>> gt;
    std::vector<double> hv;

    auto add_eq = [&](const std::vector<LinTerm>& terms, double rhs) {
        int row = static_cast<int>(bv.size());
        for (const auto& t : terms) at.emplace_back(row, t.var, t.coef);
        bv.push_back(rhs);
    };
    auto add_g = [&](const std::vector<LinTerm>& terms, double coef_sign, double rhs) {
        int row = static_cast<int>(hv.size());
        for (const auto& t : terms) gt.emplace_back(row, t.var, coef_sign * t.coef);
        hv.push_back(rhs);
    };

    for (int i = 0; i < n; ++i) {
        double lo = lower_[static_cast<std::size_t>(i)];
        double hi = upper_[static_cast<std::size_t>(i)];
        if (lo == hi) add_eq({{i, 1.0}}, lo);
    }
    for (const auto& r : rows_) {
        if (!r.equality) continue;
        auto t = merged(r.expr);
        if (t.empty()) {
            if (std::abs(r.expr.constant()) > 1e-12)
                throw std::invalid_argument("compile: inconsistent constant equality row");
            continue;
        }
        add_eq(t, -r.expr.constant());
    }

    for (int i = 0; i < n; ++i) {
        double lo = lower_[static_cast<std::size_t>(i)];
        double hi = upper_[static_cast<std::size_t>(i)];
        if (lo == hi) continue;
        if (std::isfinite(lo)) add_g({{i, 1.0}}, -1.0, -lo);
        if (std::isfinite(hi)) add_g({{i, 1.0}}, 1.0, hi);
    }
    for (const auto& r : rows_) {
        if (r.equality) continue;
        auto t = merged(r.expr);
        if (t.empty()) {
            if (r.expr.constant() > 1e-12) throw std::invalid_argument("compile: infeasible constant row");
            continue;
        }
        add_g(t, 1.0, -r.expr.constant());
    }
    out.num_nonneg = static_cast<int>(hv.size());
    for (const auto& c : cones_) {
        add_g(merged(c.t), -1.0, c.t.constant());
        for (const auto& w : c.w) add_g(merged(w), -1.0, w.constant());
        out.soc_dims.push_back(static_cast<int>(c.w.size()) + 1);
    }

    out.A.resize(static_cast<int>(bv.size()), n);
    out.A.setFromTriplets(at.begin(), at.end());
    out.A.makeCompressed();
    out.b = Eigen::Map<const Vector>(bv.data(), static_cast<Eigen::Index>(bv.size()));
    out.G.resize(static_cast<int>(hv.size()), n);
    out.G.setFromTriplets(gt.begin(), gt.end());
    out.G.makeCompressed();
    out.h = Eigen::Map<const Vector>(hv.data(), static_cast<Eigen::Index>(hv.size()));
    return out;
}

}  // namespace prefgrid
