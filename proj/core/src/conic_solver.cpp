#include "prefgrid/conic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace prefgrid {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::NumericalLimit: return "numerical-limit";
    }
    return "unknown";
}

namespace {

using RowMajorMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

double inf_norm(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// x0^2 - ||x1||^2 computed as a product to limit cancellation.
double soc_det(const double* u, int k) {
    double n1 = 0.0;
    for (int i = 1; i < k; ++i) n1 += u[i] * u[i];
    n1 = std::sqrt(n1);
    return (u[0] - n1) * (u[0] + n1);
}

struct ConeLayout {
    int nonneg = 0;
    std::vector<int> dims;
    std::vector<int> offsets;  // first row of each SOC block
    std::vector<int> flat;     // offset of each SOC block inside the W^-2 flat array
    int rows = 0;
    int flat_size = 0;
    int degree = 0;

    explicit ConeLayout(const ConicProblem& p) : nonneg(p.num_nonneg), dims(p.soc_dims) {
        int row = nonneg;
        int f = nonneg;
        for (int k : dims) {
            offsets.push_back(row);
            flat.push_back(f);
            row += k;
            f += k * k;
        }
        rows = row;
        flat_size = f;
        degree = nonneg + static_cast<int>(dims.size());
    }
};

// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct Scaling {
    Vector w_lp;
    std::vector<double> beta;
    Vector v;  // SOC hyperbolic reflection vectors, stacked by block
};

void identity_scaling(const ConeLayout& L, Scaling& W) {
    W.w_lp = Vector::Ones(L.nonneg);
    W.beta.assign(L.dims.size(), 1.0);
    W.v = Vector::Zero(L.rows - L.nonneg);
    for (std::size_t b = 0; b < L.dims.size(); ++b) W.v[L.offsets[b] - L.nonneg] = 1.0;
}

// Returns false if s or z has left the cone interior.
bool compute_scaling(const ConeLayout& L, const Vector& s, const Vector& z, Scaling& W, Vector& lambda) {
    W.w_lp.resize(L.nonneg);
    W.beta.resize(L.dims.size());
    W.v.resize(L.rows - L.nonneg);
    lambda.resize(L.rows);
    for (int i = 0; i < L.nonneg; ++i) {
        if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
        W.w_lp[i] = std::sqrt(s[i] / z[i]);
        lambda[i] = std::sqrt(s[i] * z[i]);
    }
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const int o = L.offsets[b];
        double sd = soc_det(s.data() + o, k);
        double zd = soc_det(z.data() + o, k);
        if (!(sd > 0.0) || !(zd > 0.0) || s[o] <= 0.0 || z[o] <= 0.0) return false;
        double sn = std::sqrt(sd);
        double zn = std::sqrt(zd);
        double sz = 0.0;
        for (int i = 0; i < k; ++i) sz += (s[o + i] / sn) * (z[o + i] / zn);
        double gamma = std::sqrt(0.5 * (1.0 + sz));
        double* v = W.v.data() + (o - L.nonneg);
        v[0] = (s[o] / sn + z[o] / zn) / (2.0 * gamma);
        for (int i = 1; i < k; ++i) v[i] = (s[o + i] / sn - z[o + i] / zn) / (2.0 * gamma);
        double scale = std::sqrt(2.0 * (v[0] + 1.0));
        v[0] += 1.0;
        for (int i = 0; i < k; ++i) v[i] /= scale;
        W.beta[b] = std::sqrt(sn / zn);
        double vz = 0.0;
        for (int i = 0; i < k; ++i) vz += v[i] * z[o + i];
        lambda[o] = W.beta[b] * (2.0 * v[0] * vz - z[o]);
        for (int i = 1; i < k; ++i) lambda[o + i] = W.beta[b] * (2.0 * v[i] * vz + z[o + i]);
    }
    return true;
}

// out = W x (inverse=false) or W^{-1} x (inverse=true).
void apply_scaling(const ConeLayout& L, const Scaling& W, const Vector& x, Vector& out, bool inverse) {
    out.resize(L.rows);
    for (int i = 0; i < L.nonneg; ++i) out[i] = inverse ? x[i] / W.w_lp[i] : x[i] * W.w_lp[i];
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const int o = L.offsets[b];
        const double* v = W.v.data() + (o - L.nonneg);
        if (!inverse) {
            double vx = 0.0;
            for (int i = 0; i < k; ++i) vx += v[i] * x[o + i];
            out[o] = W.beta[b] * (2.0 * v[0] * vx - x[o]);
            for (int i = 1; i < k; ++i) out[o + i] = W.beta[b] * (2.0 * v[i] * vx + x[o + i]);
        } else {
            // W^{-1} = (2 J v v' J - J) / beta
            double jvx = v[0] * x[o];
            for (int i = 1; i < k; ++i) jvx -= v[i] * x[o + i];
            out[o] = (2.0 * v[0] * jvx - x[o]) / W.beta[b];
            for (int i = 1; i < k; ++i) out[o + i] = (-2.0 * v[i] * jvx + x[o + i]) / W.beta[b];
        }
    }
}

// Per-row metric used by the KKT system: z/s for nonnegative rows (the reduced
// part) and the dense block W^2 for each second-order cone.
void fill_metric(const ConeLayout& L, const Scaling& W, std::vector<double>& flat) {
    flat.resize(static_cast<std::size_t>(L.flat_size));
    for (int i = 0; i < L.nonneg; ++i) flat[static_cast<std::size_t>(i)] = 1.0 / (W.w_lp[i] * W.w_lp[i]);
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const double* v = W.v.data() + (L.offsets[b] - L.nonneg);
        // W^2 = beta^2 (2 v v' - J)^2 = beta^2 (4 (v'v) v v' - 2 (v J v' + J v v') + I)
        double vv = 0.0;
        for (int i = 0; i < k; ++i) vv += v[i] * v[i];
        double b2 = W.beta[b] * W.beta[b];
        double* dst = flat.data() + L.flat[b];
        for (int i = 0; i < k; ++i) {
            double ji = i == 0 ? 1.0 : -1.0;
            for (int j = 0; j < k; ++j) {
                double jj = j == 0 ? 1.0 : -1.0;
                double val = 4.0 * vv * v[i] * v[j] - 2.0 * v[i] * v[j] * (ji + jj) + (i == j ? 1.0 : 0.0);
                dst[i * k + j] = b2 * val;
            }
        }
    }
}

// out = W^2 x using the metric blocks (nonnegative rows use s/z).
void apply_w2(const ConeLayout& L, const std::vector<double>& flat, const Vector& x, Vector& out) {
    out.resize(L.rows);
    for (int i = 0; i < L.nonneg; ++i) out[i] = x[i] / flat[static_cast<std::size_t>(i)];
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const int o = L.offsets[b];
        const double* m = flat.data() + L.flat[b];
        for (int i = 0; i < k; ++i) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += m[i * k + j] * x[o + j];
            out[o + i] = acc;
        }
    }
}

// Jordan product u o v.
void cone_product(const ConeLayout& L, const Vector& u, const Vector& v, Vector& out) {
    out.resize(L.rows);
    for (int i = 0; i < L.nonneg; ++i) out[i] = u[i] * v[i];
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const int o = L.offsets[b];
        double d = 0.0;
        for (int i = 0; i < k; ++i) d += u[o + i] * v[o + i];
        for (int i = 1; i < k; ++i) out[o + i] = u[o] * v[o + i] + v[o] * u[o + i];
        out[o] = d;
    }
}

// Solves lambda o x = r for x.
void cone_divide(const ConeLayout& L, const Vector& lambda, const Vector& r, Vector& out) {
    out.resize(L.rows);
    for (int i = 0; i < L.nonneg; ++i) out[i] = r[i] / lambda[i];
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const int o = L.offsets[b];
        double l0 = lambda[o];
        double det = soc_det(lambda.data() + o, k);
        double lr = 0.0;
        for (int i = 1; i < k; ++i) lr += lambda[o + i] * r[o + i];
        double x0 = (l0 * r[o] - lr) / det;
        for (int i = 1; i < k; ++i) out[o + i] = (r[o + i] - x0 * lambda[o + i]) / l0;
        out[o] = x0;
    }
}

void add_identity(const ConeLayout& L, Vector& u, double t) {
    for (int i = 0; i < L.nonneg; ++i) u[i] += t;
    for (int o : L.offsets) u[o] += t;
}

// Largest t with u + t*e in the cone boundary direction, i.e. max over blocks of
// the largest eigenvalue of -u.
double max_neg_eigen(const ConeLayout& L, const Vector& u) {
    double t = -kInf;
    for (int i = 0; i < L.nonneg; ++i) t = std::max(t, -u[i]);
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const int o = L.offsets[b];
        double n1 = 0.0;
        for (int i = 1; i < k; ++i) n1 += u[o + i] * u[o + i];
        t = std::max(t, std::sqrt(n1) - u[o]);
    }
    return t;
}

// Largest alpha >= 0 with u + alpha*du in the cone (u interior).
double max_step(const ConeLayout& L, const Vector& u, const Vector& du) {
    double alpha = kInf;
    for (int i = 0; i < L.nonneg; ++i)
        if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
    for (std::size_t b = 0; b < L.dims.size(); ++b) {
        const int k = L.dims[b];
        const int o = L.offsets[b];
        double a = du[o] * du[o];
        double bb = u[o] * du[o];
        for (int i = 1; i < k; ++i) {
            a -= du[o + i] * du[o + i];
            bb -= u[o + i] * du[o + i];
        }
        double c = soc_det(u.data() + o, k);
        double root = kInf;
        double disc = bb * bb - a * c;
        if (std::abs(a) < 1e-300) {
            if (bb < 0.0) root = -c / (2.0 * bb);
        } else if (disc >= 0.0) {
            double sq = std::sqrt(disc);
            double qq = -(bb + (bb >= 0.0 ? sq : -sq));
            double r1 = qq / a;
            double r2 = qq != 0.0 ? c / qq : kInf;
            if (r1 > 0.0) root = std::min(root, r1);
            if (r2 > 0.0) root = std::min(root, r2);
        }
        if (du[o] < 0.0) root = std::min(root, -u[o] / du[o]);
        alpha = std::min(alpha, root);
    }
    return alpha;
}

struct Contribution {
    int pos;
    int flat;
    double coef;
};

}  // namespace

// KKT system in the unknowns (dx, dy, dz_soc); nonnegative rows are eliminated
// exactly, cone rows stay explicit with their W^2 block so no inverse scaling
// is ever formed.
struct ConicSolver::Impl {
    ConicProblem prob;
    SolverSettings settings;
    ConeLayout layout;
    RowMajorMatrix G_rows;
    SparseMatrix At;
    SparseMatrix Gt;
    SparseMatrix G_lp;
    SparseMatrix G_lpT;
    Vector q;
    double constant = 0.0;
    Vector shift;

    int n = 0;
    int p = 0;
    int ms = 0;  // cone rows kept in the KKT system
    SparseMatrix K;
    std::vector<int> diag_pos;
    std::vector<std::pair<int, double>> p_entries;
    std::vector<Contribution> lp_entries;
    std::vector<std::pair<int, double>> fixed_entries;  // A and cone rows of G
    std::vector<int> eq_diag_pos;
    std::vector<Contribution> soc_entries;  // -W^2 blocks
    std::vector<int> soc_diag_pos;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Upper, Eigen::AMDOrdering<int>> ldlt;

    double cost_scale = 1.0;
    Vector shift_scaled;
    std::vector<double> flat;
    double reg = 0.0;

    Impl(ConicProblem pr, SolverSettings st) : prob(std::move(pr)), settings(st), layout(prob) {
        if (layout.rows != prob.G.rows()) throw std::invalid_argument("ConicSolver: cone dimensions do not match G");
        if (prob.A.cols() != prob.num_vars || prob.G.cols() != prob.num_vars || prob.P.cols() != prob.num_vars)
            throw std::invalid_argument("ConicSolver: inconsistent problem dimensions");
        G_rows = prob.G;
        At = prob.A.transpose();
        Gt = prob.G.transpose();
        q = prob.q;
        constant = prob.constant;
        shift = Vector::Zero(prob.num_vars);
        n = prob.num_vars;
        p = static_cast<int>(prob.A.rows());
        ms = layout.rows - layout.nonneg;
        G_lp = prob.G.topRows(layout.nonneg);
        G_lpT = G_lp.transpose();
        build_pattern();
    }

    int find_pos(int row, int col) const {
        const int* inner = K.innerIndexPtr();
        const int* begin = inner + K.outerIndexPtr()[col];
        const int* end = inner + K.outerIndexPtr()[col + 1];
        const int* it = std::lower_bound(begin, end, row);
        if (it == end || *it != row) throw std::logic_error("ConicSolver: KKT pattern lookup failed");
        return static_cast<int>(it - inner);
    }

    int soc_index(int cone_row) const { return n + p + (cone_row - layout.nonneg); }

    void build_pattern() {
        const int dim = n + p + ms;
        std::vector<Eigen::Triplet<double>> trip;
        for (int i = 0; i < dim; ++i) trip.emplace_back(i, i, 0.0);
        for (int c = 0; c < prob.P.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(prob.P, c); it; ++it)
                if (it.row() <= it.col()) trip.emplace_back(it.row(), it.col(), 0.0);
        for (int c = 0; c < prob.A.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(prob.A, c); it; ++it) trip.emplace_back(c, n + it.row(), 0.0);
        for (int r = 0; r < layout.nonneg; ++r)
            for (RowMajorMatrix::InnerIterator a(G_rows, r); a; ++a)
                for (RowMajorMatrix::InnerIterator c(G_rows, r); c; ++c)
                    if (a.col() <= c.col()) trip.emplace_back(a.col(), c.col(), 0.0);
        for (int r = layout.nonneg; r < layout.rows; ++r)
            for (RowMajorMatrix::InnerIterator a(G_rows, r); a; ++a) trip.emplace_back(a.col(), soc_index(r), 0.0);
        for (std::size_t b = 0; b < layout.dims.size(); ++b)
            for (int i = 0; i < layout.dims[b]; ++i)
                for (int j = i; j < layout.dims[b]; ++j)
                    trip.emplace_back(soc_index(layout.offsets[b] + i), soc_index(layout.offsets[b] + j), 0.0);

        K.resize(dim, dim);
        K.setFromTriplets(trip.begin(), trip.end());
        K.makeCompressed();

        diag_pos.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) diag_pos[static_cast<std::size_t>(i)] = find_pos(i, i);
        eq_diag_pos.resize(static_cast<std::size_t>(p));
        for (int r = 0; r < p; ++r) eq_diag_pos[static_cast<std::size_t>(r)] = find_pos(n + r, n + r);
        soc_diag_pos.resize(static_cast<std::size_t>(ms));
        for (int r = 0; r < ms; ++r) soc_diag_pos[static_cast<std::size_t>(r)] = find_pos(n + p + r, n + p + r);
        for (int c = 0; c < prob.P.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(prob.P, c); it; ++it)
                if (it.row() <= it.col()) p_entries.emplace_back(find_pos(static_cast<int>(it.row()), c), it.value());
        for (int c = 0; c < prob.A.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(prob.A, c); it; ++it)
                fixed_entries.emplace_back(find_pos(c, n + static_cast<int>(it.row())), it.value());
        for (int r = layout.nonneg; r < layout.rows; ++r)
            for (RowMajorMatrix::InnerIterator a(G_rows, r); a; ++a)
                fixed_entries.emplace_back(find_pos(static_cast<int>(a.col()), soc_index(r)), a.value());
        for (int r = 0; r < layout.nonneg; ++r)
            for (RowMajorMatrix::InnerIterator a(G_rows, r); a; ++a)
                for (RowMajorMatrix::InnerIterator c(G_rows, r); c; ++c)
                    if (a.col() <= c.col())
                        lp_entries.push_back({find_pos(static_cast<int>(a.col()), static_cast<int>(c.col())), r,
                                              a.value() * c.value()});
        std::sort(lp_entries.begin(), lp_entries.end(),
                  [](const Contribution& x, const Contribution& y) { return x.pos < y.pos; });
        for (std::size_t b = 0; b < layout.dims.size(); ++b) {
            const int k = layout.dims[b];
            for (int i = 0; i < k; ++i)
                for (int j = i; j < k; ++j)
                    soc_entries.push_back({find_pos(soc_index(layout.offsets[b] + i), soc_index(layout.offsets[b] + j)),
                                           layout.flat[b] + i * k + j, -1.0});
        }
        ldlt.analyzePattern(K);
    }

    bool factor() {
        double* val = K.valuePtr();
        std::fill(val, val + K.nonZeros(), 0.0);
        for (const auto& [pos, v] : p_entries) val[pos] += v / cost_scale;
        for (int i = 0; i < n; ++i) val[diag_pos[static_cast<std::size_t>(i)]] += shift_scaled[i] + reg;
        for (const auto& [pos, v] : fixed_entries) val[pos] = v;
        for (int pos : eq_diag_pos) val[pos] = -reg;
        for (const auto& c : lp_entries) val[c.pos] += flat[static_cast<std::size_t>(c.flat)] * c.coef;
        for (const auto& c : soc_entries) val[c.pos] += flat[static_cast<std::size_t>(c.flat)] * c.coef;
        for (int pos : soc_diag_pos) val[pos] -= reg;
        ldlt.factorize(K);
        return ldlt.info() == Eigen::Success;
    }

    void solve_once(const Vector& bx, const Vector& by, const Vector& bz, Vector& dx, Vector& dy, Vector& dz) const {
        const int l = layout.nonneg;
        Vector rhs(n + p + ms);
        Vector dbz = bz.head(l).cwiseProduct(Eigen::Map<const Vector>(flat.data(), l));
        rhs.head(n) = bx;
        if (l > 0) rhs.head(n) += G_lpT * dbz;
        rhs.segment(n, p) = by;
        rhs.tail(ms) = bz.tail(ms);
        Vector sol = ldlt.solve(rhs);
        dx = sol.head(n);
        dy = sol.segment(n, p);
        dz.resize(layout.rows);
        if (l > 0)
            dz.head(l) = (G_lp * dx - bz.head(l)).cwiseProduct(Eigen::Map<const Vector>(flat.data(), l));
        dz.tail(ms) = sol.tail(ms);
    }

    // Solves [P A' G'; A 0 0; G 0 -W^2] [dx; dy; dz] = [bx; by; bz] with
    // iterative refinement on the unregularized system.
    void solve_kkt(const Vector& bx, const Vector& by, const Vector& bz, Vector& dx, Vector& dy, Vector& dz) const {
        solve_once(bx, by, bz, dx, dy, dz);
        const double scale = 1.0 + std::max({inf_norm(bx), inf_norm(by), inf_norm(bz)});
        Vector r1, r2, r3, w2, ex, ey, ez;
        for (int k = 0; k < settings.refine_steps; ++k) {
            r1 = bx - prob.P * dx / cost_scale - shift_scaled.cwiseProduct(dx) - At * dy - Gt * dz;
            r2 = by - prob.A * dx;
            apply_w2(layout, flat, dz, w2);
            r3 = bz - prob.G * dx + w2;
            if (std::max({inf_norm(r1), inf_norm(r2), inf_norm(r3)}) <= 1e-15 * scale) break;
            solve_once(r1, r2, r3, ex, ey, ez);
            dx += ex;
            dy += ey;
            dz += ez;
        }
    }

    SolveResult run() {
        const int m = layout.rows;
        const double nu = std::max(1, layout.degree);

        double pmax = 0.0;
        for (const auto& e : p_entries) pmax = std::max(pmax, std::abs(e.second));
        cost_scale = std::max({1.0, inf_norm(q), pmax, inf_norm(shift)});
        shift_scaled = shift / cost_scale;
        const Vector qs = q / cost_scale;
        const double bnorm = 1.0 + inf_norm(prob.b);
        const double hnorm = 1.0 + inf_norm(prob.h);
        const double qnorm = 1.0 + inf_norm(qs);

        auto P_times = [&](const Vector& x) -> Vector {
            return prob.P * x / cost_scale + shift_scaled.cwiseProduct(x);
        };

        SolveResult res;
        Scaling W;
        Vector lambda;
        reg = settings.regularization;

        identity_scaling(layout, W);
        fill_metric(layout, W, flat);
        if (!factor()) {
            reg = std::max(reg, 1e-8);
            if (!factor()) {
                res.status = SolveStatus::NumericalLimit;
                return res;
            }
        }
        Vector x, y, z, s;
        solve_kkt(-qs, prob.b, prob.h, x, y, z);
        s = -z;
        if (m > 0) {
            double ts = max_neg_eigen(layout, s);
            if (ts >= -1e-8 * std::max(1.0, s.norm())) add_identity(layout, s, 1.0 + ts);
            double tz = max_neg_eigen(layout, z);
            if (tz >= -1e-8 * std::max(1.0, z.norm())) add_identity(layout, z, 1.0 + tz);
        }

        Vector best_x = x, best_y = y, best_z = z, best_s = s;
        double best_merit = kInf;
        double best_pres = kInf, best_dres = kInf, best_mu = kInf;

        Vector rx, ry, rz, dx, dy, dz, ds, dxa, dya, dza, dsa, tmp, w2, bs, r_s, ws, wz;
        int it = 0;
        bool converged = false;
        bool infeasible = false;
        for (; it <= settings.max_iter; ++it) {
            rx = P_times(x) + qs + At * y + Gt * z;
            ry = prob.A * x - prob.b;
            rz = prob.G * x + s - prob.h;
            double gap = m ? s.dot(z) : 0.0;
            double mu = gap / nu;
            double pres = std::max(inf_norm(ry) / bnorm, inf_norm(rz) / hnorm);
            double dres = inf_norm(rx) / qnorm;
            double merit = std::max({pres, dres, mu});
            if (merit < best_merit) {
                best_merit = merit;
                best_x = x;
                best_y = y;
                best_z = z;
                best_s = s;
                best_pres = pres;
                best_dres = dres;
                best_mu = mu;
            }
            if (pres <= settings.feastol && dres <= settings.feastol && mu <= settings.mu_tol) {
                converged = true;
                break;
            }
            double tau = -(prob.b.dot(y) + prob.h.dot(z));
            if (tau > 0.0 && it > 5) {
                double cert = inf_norm(At * y + Gt * z) / tau;
                if (cert <= settings.infeas_tol && pres > settings.feastol) {
                    infeasible = true;
                    break;
                }
            }
            if (it == settings.max_iter) break;

            if (m > 0 && !compute_scaling(layout, s, z, W, lambda)) break;
            fill_metric(layout, W, flat);

            // A collapsed step near the end usually means a poorly conditioned
            // KKT solve; retry with a larger regularization before giving up.
            double alpha = 0.0;
            for (int attempt = 0; attempt < 4; ++attempt) {
                if (attempt > 0) reg = std::max(reg * 100.0, 1e-9);
                if (reg > 1e-4) break;
                if (!factor()) continue;

                // predictor: lambda o (W^-1 ds + W dz) = -lambda o lambda
                r_s = -lambda;
                apply_scaling(layout, W, r_s, tmp, false);
                solve_kkt(-rx, -ry, -rz - tmp, dxa, dya, dza);
                apply_w2(layout, flat, dza, w2);
                dsa = tmp - w2;
                double alpha_aff = m ? std::min({1.0, max_step(layout, s, dsa), max_step(layout, z, dza)}) : 1.0;
                double sigma = std::pow(1.0 - alpha_aff, 3);

                // corrector
                apply_scaling(layout, W, dsa, ws, true);
                apply_scaling(layout, W, dza, wz, false);
                cone_product(layout, lambda, lambda, bs);
                cone_product(layout, ws, wz, tmp);
                bs = -bs - tmp;
                add_identity(layout, bs, sigma * mu);
                cone_divide(layout, lambda, bs, r_s);
                apply_scaling(layout, W, r_s, tmp, false);
                solve_kkt(-rx, -ry, -rz - tmp, dx, dy, dz);
                apply_w2(layout, flat, dz, w2);
                ds = tmp - w2;

                alpha = m ? std::min(max_step(layout, s, ds), max_step(layout, z, dz)) : kInf;
                alpha = std::min(1.0, settings.step_fraction * alpha);
                if (alpha > 1e-8) break;
            }
            if (!(alpha > 1e-12)) break;
            x += alpha * dx;
            y += alpha * dy;
            z += alpha * dz;
            s += alpha * ds;
        }

        res.iterations = it;
        if (infeasible) {
            res.status = SolveStatus::Infeasible;
            res.y = y * cost_scale;
            res.z = z * cost_scale;
            return res;
        }
        if (converged) {
            best_x = x;
            best_y = y;
            best_z = z;
            best_s = s;
            best_pres = std::max(inf_norm(prob.A * x - prob.b) / bnorm, inf_norm(prob.G * x + s - prob.h) / hnorm);
            best_dres = inf_norm(P_times(x) + qs + At * y + Gt * z) / qnorm;
            best_mu = m ? s.dot(z) / nu : 0.0;
        }
        res.x = best_x;
        res.y = best_y * cost_scale;
        res.z = best_z * cost_scale;
        res.s = best_s;
        res.primal_residual = best_pres;
        res.dual_residual = best_dres;
        res.mean_complementarity = best_mu * cost_scale;
        if (converged) {
            res.status = SolveStatus::Optimal;
        } else if (best_pres <= 1e-6 && best_dres <= 1e-6 && best_mu <= 1e-8) {
            res.status = SolveStatus::Optimal;
            res.reduced_accuracy = true;
        } else {
            res.status = SolveStatus::NumericalLimit;
        }
        Vector ps = prob.P * res.x + shift.cwiseProduct(res.x);
        res.objective = 0.5 * res.x.dot(ps) + q.dot(res.x) + constant;
        return res;
    }
};

ConicSolver::ConicSolver(ConicProblem problem, SolverSettings settings)
    : impl_(std::make_unique<Impl>(std::move(problem), settings)) {}
ConicSolver::~ConicSolver() = default;
ConicSolver::ConicSolver(ConicSolver&&) noexcept = default;
ConicSolver& ConicSolver::operator=(ConicSolver&&) noexcept = default;

const ConicProblem& ConicSolver::problem() const { return impl_->prob; }

void ConicSolver::set_linear_cost(const Vector& q) {
    if (q.size() != impl_->prob.num_vars) throw std::invalid_argument("set_linear_cost: size mismatch");
    impl_->q = q;
}

void ConicSolver::set_constant_cost(double c) { impl_->constant = c; }

void ConicSolver::set_diagonal_shift(const Vector& shift) {
    if (shift.size() != impl_->prob.num_vars) throw std::invalid_argument("set_diagonal_shift: size mismatch");
    if ((shift.array() < 0.0).any()) throw std::invalid_argument("set_diagonal_shift: negative entry");
    impl_->shift = shift;
}

SolveResult ConicSolver::solve() { return impl_->run(); }

SolveResult solve_conic(const ConicProblem& problem, const SolverSettings& settings) {
    ConicSolver solver(problem, settings);
    return solver.solve();
}

KktReport kkt_report(const ConicProblem& problem, const SolveResult& sol) {
    KktReport r;
    const ConeLayout L(problem);
    const Vector& x = sol.x;
    if (problem.A.rows() > 0) r.equality_residual = inf_norm(problem.A * x - problem.b);
    Vector slack = problem.h - problem.G * x;
    auto outside = [&](const Vector& u) {
        double worst = 0.0;
        for (int i = 0; i < L.nonneg; ++i) worst = std::max(worst, -u[i]);
        for (std::size_t b = 0; b < L.dims.size(); ++b) {
            const int o = L.offsets[b];
            double n1 = 0.0;
            for (int i = 1; i < L.dims[b]; ++i) n1 += u[o + i] * u[o + i];
            worst = std::max(worst, std::sqrt(n1) - u[o]);
        }
        return worst;
    };
    r.cone_residual = outside(slack);
    r.dual_cone_residual = sol.z.size() ? outside(sol.z) : 0.0;
    Vector grad = problem.P * x + problem.q;
    if (problem.A.rows() > 0) grad += problem.A.transpose() * sol.y;
    if (problem.G.rows() > 0) grad += problem.G.transpose() * sol.z;
    r.stationarity = inf_norm(grad) / (1.0 + inf_norm(problem.q));
    r.complementarity = problem.G.rows() > 0 ? std::abs(sol.z.dot(slack)) : 0.0;
    double primal = problem.objective(x);
    double dual = primal - r.complementarity;
    if (problem.A.rows() > 0) dual -= sol.y.dot(problem.b - problem.A * x);
    r.duality_gap = std::abs(primal - dual) / (1.0 + std::abs(primal));
    return r;
}

}  // namespace prefgrid
