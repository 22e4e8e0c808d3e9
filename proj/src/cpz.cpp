#include "cpzrepair/cpz.hpp"

#include "cpz_structure.hpp"
#include "cpzrepair/bounded_lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace cpzrepair {

namespace detail {

namespace {

double ipow(double x, int e)
{
    double r = 1.0;
    while (e > 0) {
        if (e & 1) r *= x;
        x *= x;
        e >>= 1;
    }
    return r;
}

// Value of the monomial and its partial derivative along each of its terms.
template <class Sink>
double monomial_with_gradient(const Monomial& mono, const Vector& a, Sink&& sink)
{
    const auto& t = mono.terms;
    double value = 1.0;
    for (const auto& [k, e] : t) value *= ipow(a[k], e);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto [k, e] = t[i];
        double d = e * ipow(a[k], e - 1);
        for (std::size_t j = 0; j < t.size(); ++j)
            if (j != i) d *= ipow(a[t[j].first], t[j].second);
        sink(k, d);
    }
    return value;
}

struct UnionFind
{
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent[a] = b;  // smallest index is the root
    }
};

void detect_binary(Compiled& cp)
{
    for (Eigen::Index r = 0; r < cp.A.rows(); ++r) {
        int only = -1, count = 0;
        for (Eigen::Index j = 0; j < cp.A.cols(); ++j)
            if (cp.A(r, j) != 0.0) {
                only = static_cast<int>(j);
                ++count;
            }
        if (count != 1) continue;
        const auto& t = cp.con[only].terms;
        if (t.size() != 1 || t.front().second != 2) continue;
        const double alpha = cp.A(r, only);
        if (std::abs(cp.b[r] - alpha) > 1e-12 * std::abs(alpha)) continue;
        if (std::find(cp.binary.begin(), cp.binary.end(), t.front().first) == cp.binary.end())
            cp.binary.push_back(t.front().first);
    }
    std::sort(cp.binary.begin(), cp.binary.end());
}

}  // namespace

double Monomial::value(const Vector& a) const
{
    double v = 1.0;
    for (const auto& [k, e] : terms) v *= ipow(a[k], e);
    return v;
}

Monomial monomial_from_column(const ExponentMatrix& E, int col)
{
    Monomial m;
    for (int k = 0; k < E.rows(); ++k)
        if (E(k, col) != 0) m.terms.emplace_back(k, E(k, col));
    return m;
}

void Compiled::point(const Vector& a, Vector& x) const
{
    x = c;
    for (std::size_t j = 0; j < gen.size(); ++j) x.noalias() += G.col(static_cast<Eigen::Index>(j)) * gen[j].value(a);
}

void Compiled::point_jacobian(const Vector& a, Vector& x, Matrix& J) const
{
    x = c;
    J.setZero(c.size(), p);
    for (std::size_t j = 0; j < gen.size(); ++j) {
        const auto col = G.col(static_cast<Eigen::Index>(j));
        const double v = monomial_with_gradient(gen[j], a, [&](int k, double d) { J.col(k).noalias() += col * d; });
        x.noalias() += col * v;
    }
}

void Compiled::residual(const Vector& a, Vector& r) const
{
    r = -b;
    for (std::size_t j = 0; j < con.size(); ++j) r.noalias() += A.col(static_cast<Eigen::Index>(j)) * con[j].value(a);
}

void Compiled::residual_jacobian(const Vector& a, Vector& r, Matrix& J) const
{
    r = -b;
    J.setZero(b.size(), p);
    for (std::size_t j = 0; j < con.size(); ++j) {
        const auto col = A.col(static_cast<Eigen::Index>(j));
        const double v = monomial_with_gradient(con[j], a, [&](int k, double d) { J.col(k).noalias() += col * d; });
        r.noalias() += col * v;
    }
}

Structure Structure::build(const Cpz& S)
{
    Structure st;
    const int n = S.dimension();
    const int p = S.num_factors();
    const int m = S.num_constraints();
    const Matrix& G = S.generators();
    const Matrix& A = S.constraint_generators();

    Compiled& w = st.whole;
    w.c = S.center();
    w.G = G;
    w.A = A;
    w.b = S.constraint_values();
    w.p = p;
    for (int j = 0; j < G.cols(); ++j) w.gen.push_back(monomial_from_column(S.exponents(), j));
    for (int j = 0; j < A.cols(); ++j) w.con.push_back(monomial_from_column(S.constraint_exponents(), j));

    // Constant terms fold into the center / right-hand side.
    Vector c_eff = w.c;
    Vector b_eff = w.b;
    for (int j = 0; j < G.cols(); ++j)
        if (w.gen[j].terms.empty()) c_eff += G.col(j);
    for (int j = 0; j < A.cols(); ++j)
        if (w.con[j].terms.empty()) b_eff -= A.col(j);

    UnionFind uf(n + p + m);
    for (int j = 0; j < G.cols(); ++j) {
        const auto& t = w.gen[j].terms;
        if (t.empty()) continue;
        const int f0 = n + t.front().first;
        for (const auto& term : t) uf.unite(f0, n + term.first);
        for (int i = 0; i < n; ++i)
            if (G(i, j) != 0.0) uf.unite(i, f0);
    }
    for (int j = 0; j < A.cols(); ++j) {
        const auto& t = w.con[j].terms;
        if (t.empty()) continue;
        const int f0 = n + t.front().first;
        for (const auto& term : t) uf.unite(f0, n + term.first);
        for (int r = 0; r < m; ++r)
            if (A(r, j) != 0.0) uf.unite(n + p + r, f0);
    }

    std::map<int, Component> groups;  // keyed by root = smallest node index
    std::map<int, std::vector<int>> group_rows;
    for (int i = 0; i < n; ++i) groups[uf.find(i)].dims.push_back(i);
    for (int k = 0; k < p; ++k) groups[uf.find(n + k)].factors.push_back(k);
    for (int r = 0; r < m; ++r) group_rows[uf.find(n + p + r)].push_back(r);

    std::vector<int> fixed;
    for (auto& [root, comp] : groups) {
        auto rows_it = group_rows.find(root);
        std::vector<int> rows = rows_it == group_rows.end() ? std::vector<int>{} : rows_it->second;
        if (comp.factors.empty()) {
            for (int i : comp.dims) fixed.push_back(i);
            continue;
        }
        if (comp.dims.empty() && rows.empty()) continue;  // free, unused factors

        std::vector<int> local(static_cast<std::size_t>(p), -1);
        for (std::size_t i = 0; i < comp.factors.size(); ++i) local[comp.factors[i]] = static_cast<int>(i);

        Compiled& cp = comp.problem;
        cp.p = static_cast<int>(comp.factors.size());
        cp.c.resize(static_cast<Eigen::Index>(comp.dims.size()));
        for (std::size_t i = 0; i < comp.dims.size(); ++i) cp.c[i] = c_eff[comp.dims[i]];

        std::vector<int> gcols, ccols;
        for (int j = 0; j < G.cols(); ++j)
            if (!w.gen[j].terms.empty() && uf.find(n + w.gen[j].terms.front().first) == root) gcols.push_back(j);
        for (int j = 0; j < A.cols(); ++j)
            if (!w.con[j].terms.empty() && uf.find(n + w.con[j].terms.front().first) == root) ccols.push_back(j);

        cp.G.resize(static_cast<Eigen::Index>(comp.dims.size()), static_cast<Eigen::Index>(gcols.size()));
        for (std::size_t jj = 0; jj < gcols.size(); ++jj) {
            for (std::size_t i = 0; i < comp.dims.size(); ++i) cp.G(i, jj) = G(comp.dims[i], gcols[jj]);
            Monomial mono = w.gen[gcols[jj]];
            for (auto& term : mono.terms) term.first = local[term.first];
            cp.gen.push_back(std::move(mono));
        }
        cp.A.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ccols.size()));
        cp.b.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) cp.b[i] = b_eff[rows[i]];
        for (std::size_t jj = 0; jj < ccols.size(); ++jj) {
            for (std::size_t i = 0; i < rows.size(); ++i) cp.A(i, jj) = A(rows[i], ccols[jj]);
            Monomial mono = w.con[ccols[jj]];
            for (auto& term : mono.terms) term.first = local[term.first];
            cp.con.push_back(std::move(mono));
        }
        detect_binary(cp);
        st.components.push_back(std::move(comp));
    }
    // Rows whose terms are all constant.
    for (auto& [root, rows] : group_rows) {
        if (groups.count(root)) continue;
        for (int r : rows) st.constant_row_residual = std::max(st.constant_row_residual, std::abs(b_eff[r]));
    }
    std::sort(fixed.begin(), fixed.end());
    st.fixed_dims = fixed;
    st.fixed_values.resize(static_cast<Eigen::Index>(fixed.size()));
    for (std::size_t i = 0; i < fixed.size(); ++i) st.fixed_values[i] = c_eff[fixed[i]];
    return st;
}

}  // namespace detail

using detail::Compiled;
using detail::Component;
using detail::Structure;

// ---------------------------------------------------------------------------
// Construction

Cpz::Cpz(Vector c, Matrix G, ExponentMatrix E, Matrix A, Vector b, ExponentMatrix R, std::vector<DimId> dims)
    : c_(std::move(c)), G_(std::move(G)), E_(std::move(E)), A_(std::move(A)), b_(std::move(b)), R_(std::move(R)),
      dims_(std::move(dims))
{
    const auto n = c_.size();
    if (G_.rows() != n && !(G_.size() == 0 && G_.cols() == 0))
        throw DimensionError("Cpz: G must have one row per dimension");
    if (G_.size() == 0 && G_.rows() != n) G_.resize(n, 0);
    if (E_.cols() != G_.cols()) throw DimensionError("Cpz: E and G must have the same column count");
    if (A_.rows() != b_.size()) throw DimensionError("Cpz: A must have one row per entry of b");
    if (R_.cols() != A_.cols()) throw DimensionError("Cpz: R and A must have the same column count");
    if (A_.cols() > 0 && E_.rows() != R_.rows()) {
        // A zero-column E carries no factor count; take it from R.
        if (E_.cols() == 0)
            E_.resize(R_.rows(), 0);
        else
            throw DimensionError("Cpz: E and R must share the factor count");
    }
    if (A_.cols() == 0 && R_.rows() != E_.rows()) R_.resize(E_.rows(), 0);
    if ((E_.array() < 0).any() || (R_.array() < 0).any())
        throw std::invalid_argument("Cpz: exponents must be non-negative");
    if (static_cast<Eigen::Index>(dims_.size()) != n) throw DimensionError("Cpz: need one id per dimension");
    std::unordered_set<DimId> seen;
    for (const auto& d : dims_)
        if (!seen.insert(d).second) throw DimensionError("Cpz: duplicate dimension id '" + d + "'");
    if (!c_.allFinite() || !G_.allFinite() || !A_.allFinite() || !b_.allFinite())
        throw std::invalid_argument("Cpz: non-finite entry");
    structure_ = std::make_shared<const Structure>(Structure::build(*this));
}

Cpz Cpz::zonotope(Vector c, Matrix G, ExponentMatrix E, std::vector<DimId> dims)
{
    const auto p = E.rows();
    return Cpz(std::move(c), std::move(G), std::move(E), Matrix(0, 0), Vector(0), ExponentMatrix(p, 0), std::move(dims));
}

Cpz Cpz::point(Vector c, std::vector<DimId> dims)
{
    const auto n = c.size();
    return Cpz(std::move(c), Matrix(n, 0), ExponentMatrix(0, 0), Matrix(0, 0), Vector(0), ExponentMatrix(0, 0),
               std::move(dims));
}

int Cpz::dim_index(const DimId& id) const
{
    for (std::size_t i = 0; i < dims_.size(); ++i)
        if (dims_[i] == id) return static_cast<int>(i);
    return -1;
}

bool operator==(const Cpz& a, const Cpz& b)
{
    auto same = [](const auto& x, const auto& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
    };
    return a.dims_ == b.dims_ && same(a.c_, b.c_) && same(a.G_, b.G_) && same(a.E_, b.E_) && same(a.A_, b.A_) &&
           same(a.b_, b.b_) && same(a.R_, b.R_);
}

// ---------------------------------------------------------------------------
// Exact evaluation

Vector evaluate_point(const Cpz& S, const Vector& a)
{
    if (a.size() != S.num_factors()) throw DimensionError("evaluate_point: factor vector length mismatch");
    Vector x;
    S.structure().whole.point(a, x);
    return x;
}

double constraint_residual(const Cpz& S, const Vector& a)
{
    if (a.size() != S.num_factors()) throw DimensionError("constraint_residual: factor vector length mismatch");
    if (S.num_constraints() == 0) return 0.0;
    Vector r;
    S.structure().whole.residual(a, r);
    return r.cwiseAbs().maxCoeff();
}

std::pair<Vector, Vector> interval_hull(const Cpz& S)
{
    const auto& w = S.structure().whole;
    Vector lo = w.c, hi = w.c;
    for (std::size_t j = 0; j < w.gen.size(); ++j) {
        double mlo = 1.0, mhi = 1.0;
        if (!w.gen[j].terms.empty()) {
            const bool all_even = std::all_of(w.gen[j].terms.begin(), w.gen[j].terms.end(),
                                              [](const auto& t) { return t.second % 2 == 0; });
            mlo = all_even ? 0.0 : -1.0;
        }
        for (Eigen::Index i = 0; i < w.c.size(); ++i) {
            const double g = w.G(i, static_cast<Eigen::Index>(j));
            lo[i] += std::min(g * mlo, g * mhi);
            hi[i] += std::max(g * mlo, g * mhi);
        }
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Per-component nonlinear programs

namespace {

Vector random_factors(int p, Rng& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector a(p);
    for (int k = 0; k < p; ++k) a[k] = u(rng);
    return a;
}

Vector gather(const Vector& x, const std::vector<int>& idx)
{
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
    return out;
}

// Multi-start schedule. Binary factors are pinned and their sign patterns
// cycled (up to 8 patterns, each getting the full restart count); the first
// start of every pattern is at the box center.
struct Starts
{
    const Compiled& P;
    int restarts;
    int patterns = 1;

    Starts(const Compiled& problem, int r) : P(problem), restarts(std::max(1, r))
    {
        patterns = 1 << std::min<int>(3, static_cast<int>(P.binary.size()));
    }
    int total() const { return restarts * patterns; }

    void make(int s, Rng& rng, bool center_first, Vector& a0, Vector& lo, Vector& hi) const
    {
        lo = Vector::Constant(P.p, -1.0);
        hi = Vector::Constant(P.p, 1.0);
        // s < 0: every sign drawn at random.
        const int pattern = s < 0 ? 0 : s % patterns;
        a0 = (center_first && s >= 0 && s < patterns) ? Vector(Vector::Zero(P.p)) : random_factors(P.p, rng);
        std::uniform_int_distribution<int> coin(0, 1);
        for (std::size_t i = 0; i < P.binary.size(); ++i) {
            const int k = P.binary[i];
            const bool plus = (s >= 0 && i < 3) ? ((pattern >> i) & 1) != 0 : coin(rng) == 1;
            a0[k] = lo[k] = hi[k] = plus ? 1.0 : -1.0;
        }
    }
};

nlp::LsqOptions lsq_options(const SolverOptions& opts, double target_cost)
{
    nlp::LsqOptions o;
    o.max_iterations = opts.max_iterations;
    o.target_cost = target_cost;
    return o;
}

bool component_contains(const Compiled& P, const Vector& x, const SolverOptions& opts, std::uint64_t salt)
{
    const double tol = opts.membership_tolerance;
    const double ftol = opts.feasibility_tolerance;
    const double target = 0.5 * std::pow(0.01 * std::min(tol, ftol), 2);
    const auto lsq = lsq_options(opts, target);

    Vector xa, ra;
    Matrix Jx, Jr;
    auto fn = [&](const Vector& a, Vector& r, Matrix& J) {
        P.point_jacobian(a, xa, Jx);
        P.residual_jacobian(a, ra, Jr);
        r.resize(xa.size() + ra.size());
        r << xa - x, ra;
        J.resize(r.size(), P.p);
        J << Jx, Jr;
    };
    Rng rng(opts.seed ^ (salt * 0x9e3779b97f4a7c15ULL));
    const Starts starts(P, opts.restarts);
    Vector a0, lo, hi;
    for (int s = 0; s < starts.total(); ++s) {
        starts.make(s, rng, true, a0, lo, hi);
        auto res = nlp::solve_bounded_lsq(fn, a0, lo, hi, lsq);
        P.point(res.x, xa);
        P.residual(res.x, ra);
        const double dx = xa.size() ? (xa - x).cwiseAbs().maxCoeff() : 0.0;
        const double dr = ra.size() ? ra.cwiseAbs().maxCoeff() : 0.0;
        if (dx <= tol && dr <= ftol) return true;
    }
    return false;
}

std::optional<Vector> component_feasible_factors(const Compiled& P, Rng& rng, int restarts, const SolverOptions& opts)
{
    if (P.m() == 0) return random_factors(P.p, rng);
    const double ftol = opts.feasibility_tolerance;
    const auto lsq = lsq_options(opts, 0.5 * std::pow(0.01 * ftol, 2));
    auto fn = [&](const Vector& a, Vector& r, Matrix& J) { P.residual_jacobian(a, r, J); };
    Vector r, a0, lo, hi;
    // Random sign patterns here so samples from a union are not biased
    // toward one branch.
    const Starts starts(P, restarts);
    for (int s = 0; s < starts.total(); ++s) {
        starts.make(-1, rng, false, a0, lo, hi);
        auto res = nlp::solve_bounded_lsq(fn, a0, lo, hi, lsq);
        P.residual(res.x, r);
        if (r.cwiseAbs().maxCoeff() <= ftol) return res.x;
    }
    return std::nullopt;
}

struct LocalDistance
{
    double squared = std::numeric_limits<double>::infinity();
    bool feasible = false;
    Vector factors;
};

// min ||x(a) - target||^2 s.t. constraints, optionally with one factor pinned.
LocalDistance component_distance(const Compiled& P, const Vector& target, const SolverOptions& opts,
                                 std::uint64_t salt, int pinned = -1, double pin_value = 0.0,
                                 double settle = 1e-6, int max_outer = 25, double inner_decrease = 1e-14)
{
    nlp::AugLagOptions al;
    al.settle_tolerance = settle;
    al.max_outer = max_outer;
    al.inner = lsq_options(opts, 0.0);
    al.inner.relative_decrease_tolerance = inner_decrease;
    al.feasibility_tolerance = opts.feasibility_tolerance;

    Vector xa;
    auto fn = [&](const Vector& a, Vector& F, Matrix& JF, Vector& C, Matrix& JC) {
        P.point_jacobian(a, xa, JF);
        F = xa - target;
        P.residual_jacobian(a, C, JC);
    };
    Rng rng(opts.seed ^ (salt * 0xbf58476d1ce4e5b9ULL));
    LocalDistance best;
    double best_infeasible = std::numeric_limits<double>::infinity();
    LocalDistance fallback;
    const Starts starts(P, opts.restarts);
    Vector a0, lo, hi;
    for (int s = 0; s < starts.total(); ++s) {
        starts.make(s, rng, true, a0, lo, hi);
        if (pinned >= 0) a0[pinned] = lo[pinned] = hi[pinned] = pin_value;
        auto res = nlp::solve_equality_lsq(fn, a0, lo, hi, al);
        if (res.feasible) {
            if (res.objective < best.squared) {
                best.squared = res.objective;
                best.feasible = true;
                best.factors = res.x;
            }
        } else if (res.infeasibility < best_infeasible) {
            best_infeasible = res.infeasibility;
            fallback.squared = res.objective;
            fallback.factors = res.x;
        }
    }
    return best.feasible ? best : fallback;
}

}  // namespace

bool contains(const Cpz& S, const Vector& point, const SolverOptions& opts)
{
    if (point.size() != S.dimension()) throw DimensionError("contains: point dimension mismatch");
    const Structure& st = S.structure();
    if (st.constant_row_residual > opts.feasibility_tolerance) return false;
    const auto [lo, hi] = interval_hull(S);
    for (Eigen::Index i = 0; i < point.size(); ++i)
        if (point[i] < lo[i] - opts.membership_tolerance || point[i] > hi[i] + opts.membership_tolerance) return false;
    for (std::size_t i = 0; i < st.fixed_dims.size(); ++i)
        if (std::abs(point[st.fixed_dims[i]] - st.fixed_values[i]) > opts.membership_tolerance) return false;
    for (std::size_t k = 0; k < st.components.size(); ++k) {
        const Component& comp = st.components[k];
        if (!component_contains(comp.problem, gather(point, comp.dims), opts, k + 1)) return false;
    }
    return true;
}

std::optional<Vector> sample_point(const Cpz& S, Rng& rng, int max_restarts, const SolverOptions& opts)
{
    const Structure& st = S.structure();
    if (st.constant_row_residual > opts.feasibility_tolerance) return std::nullopt;
    Vector x(S.dimension());
    for (std::size_t i = 0; i < st.fixed_dims.size(); ++i) x[st.fixed_dims[i]] = st.fixed_values[i];
    Vector local;
    for (const Component& comp : st.components) {
        auto a = component_feasible_factors(comp.problem, rng, max_restarts, opts);
        if (!a) return std::nullopt;
        comp.problem.point(*a, local);
        for (std::size_t i = 0; i < comp.dims.size(); ++i) x[comp.dims[i]] = local[i];
    }
    return x;
}

bool is_empty(const Cpz& S, int budget, const SolverOptions& opts)
{
    const Structure& st = S.structure();
    if (st.constant_row_residual > opts.feasibility_tolerance) return true;
    Rng rng(opts.seed);
    for (const Component& comp : st.components)
        if (!component_feasible_factors(comp.problem, rng, budget, opts)) return true;
    return false;
}

SetDistance distance_to_set(const Cpz& S, const Vector& point, const SolverOptions& opts)
{
    if (point.size() != S.dimension()) throw DimensionError("distance_to_set: point dimension mismatch");
    const Structure& st = S.structure();
    SetDistance out;
    if (st.constant_row_residual > opts.feasibility_tolerance) {
        out.squared = std::numeric_limits<double>::infinity();
        out.confident = false;
        return out;
    }
    for (std::size_t i = 0; i < st.fixed_dims.size(); ++i) {
        const double d = point[st.fixed_dims[i]] - st.fixed_values[i];
        out.squared += d * d;
    }
    for (std::size_t k = 0; k < st.components.size(); ++k) {
        const Component& comp = st.components[k];
        auto local = component_distance(comp.problem, gather(point, comp.dims), opts, k + 1);
        out.squared += local.squared;
        out.confident = out.confident && local.feasible;
    }
    return out;
}

SetDistance boundary_depth(const Cpz& S, const Vector& point, const DepthOptions& depth, const SolverOptions& opts)
{
    if (point.size() != S.dimension()) throw DimensionError("boundary_depth: point dimension mismatch");
    const Structure& st = S.structure();
    const auto& dims = S.dims();
    auto quantized = [&](const std::vector<int>& idx) {
        return !idx.empty() && std::all_of(idx.begin(), idx.end(),
                                           [&](int i) { return depth.quantized_dims.count(dims[i]) > 0; });
    };
    const double quantum = depth.quantum_half_width * depth.quantum_half_width;

    SetDistance out;
    out.squared = std::numeric_limits<double>::infinity();
    for (int i : st.fixed_dims) out.squared = std::min(out.squared, quantized({i}) ? quantum : 0.0);

    for (std::size_t k = 0; k < st.components.size(); ++k) {
        const Component& comp = st.components[k];
        if (comp.dims.empty()) continue;
        if (quantized(comp.dims)) {
            out.squared = std::min(out.squared, quantum);
            continue;
        }
        const Compiled& P = comp.problem;
        const Vector target = gather(point, comp.dims);

        struct Candidate
        {
            double squared;
            Vector y;
            bool feasible;
        };
        std::vector<Candidate> faces;
        // Faces are many and often degenerate (a single corner point), so
        // each gets a reduced start budget.
        SolverOptions face_opts = opts;
        face_opts.restarts = std::max(2, opts.restarts / 4);
        face_opts.max_iterations = std::min(opts.max_iterations, 60);
        for (int f = 0; f < P.p; ++f) {
            if (std::find(P.binary.begin(), P.binary.end(), f) != P.binary.end()) continue;
            for (double s : {-1.0, 1.0}) {
                auto local = component_distance(P, target, face_opts, (k + 1) * 1000 + 2 * f + (s > 0), f, s, 1e-3, 10, 1e-9);
                if (!local.feasible) continue;
                Vector y;
                P.point(local.factors, y);
                faces.push_back({local.squared, std::move(y), true});
            }
        }
        std::stable_sort(faces.begin(), faces.end(),
                         [](const Candidate& a, const Candidate& b) { return a.squared < b.squared; });

        // A face point is a boundary point if stepping past it leaves the set.
        std::optional<double> verified;
        std::uint64_t probe_salt = 7;
        for (const auto& cand : faces) {
            if (cand.squared >= out.squared) break;
            const Vector diff = cand.y - target;
            const double len = diff.norm();
            std::vector<Vector> directions;
            if (len > 10.0 * opts.membership_tolerance) {
                directions.push_back(diff / len);
            } else {
                for (Eigen::Index i = 0; i < target.size(); ++i)
                    for (double s : {-1.0, 1.0}) directions.push_back(s * Vector::Unit(target.size(), i));
            }
            bool on_boundary = false;
            for (const auto& u : directions) {
                if (!component_contains(P, cand.y + depth.probe_step * u, opts, probe_salt++)) {
                    on_boundary = true;
                    break;
                }
            }
            if (on_boundary) {
                verified = cand.squared;
                break;
            }
        }
        if (verified) {
            out.squared = std::min(out.squared, *verified);
        } else if (!faces.empty()) {
            // No face confirmed; keep the nearest one as the approximation.
            out.squared = std::min(out.squared, faces.front().squared);
            out.confident = false;
        } else {
            out.confident = false;
        }
    }
    if (!std::isfinite(out.squared)) {
        out.squared = 0.0;
        out.confident = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact set constructions

namespace {

void require_same_dims(const Cpz& S1, const Cpz& S2, const char* op)
{
    if (S1.dims() != S2.dims())
        throw DimensionError(std::string(op) + ": operands must share identical ordered dims (unify first)");
}

// Stack exponent blocks of two factor spaces: [X; 0] and [0; Y].
ExponentMatrix pad_top(const ExponentMatrix& X, int below)
{
    ExponentMatrix out = ExponentMatrix::Zero(X.rows() + below, X.cols());
    out.topRows(X.rows()) = X;
    return out;
}

ExponentMatrix pad_bottom(const ExponentMatrix& Y, int above)
{
    ExponentMatrix out = ExponentMatrix::Zero(above + Y.rows(), Y.cols());
    out.bottomRows(Y.rows()) = Y;
    return out;
}

}  // namespace

Cpz intersect(const Cpz& S1, const Cpz& S2)
{
    require_same_dims(S1, S2, "intersect");
    const int n = S1.dimension();
    const int p1 = S1.num_factors(), p2 = S2.num_factors();
    const int m1 = S1.num_constraints(), m2 = S2.num_constraints();
    const int q1 = S1.num_constraint_terms(), q2 = S2.num_constraint_terms();
    const int l1 = S1.num_generators(), l2 = S2.num_generators();
    const int p = p1 + p2;

    ExponentMatrix E = pad_top(S1.exponents(), p2);

    const int m = m1 + m2 + n;
    const int q = q1 + q2 + l1 + l2;
    Matrix A = Matrix::Zero(m, q);
    ExponentMatrix R(p, q);
    A.block(0, 0, m1, q1) = S1.constraint_generators();
    A.block(m1, q1, m2, q2) = S2.constraint_generators();
    A.block(m1 + m2, q1 + q2, n, l1) = S1.generators();
    A.block(m1 + m2, q1 + q2 + l1, n, l2) = -S2.generators();
    R << pad_top(S1.constraint_exponents(), p2), pad_bottom(S2.constraint_exponents(), p1), pad_top(S1.exponents(), p2),
        pad_bottom(S2.exponents(), p1);

    Vector b(m);
    b << S1.constraint_values(), S2.constraint_values(), S2.center() - S1.center();
    return Cpz(S1.center(), S1.generators(), std::move(E), std::move(A), std::move(b), std::move(R), S1.dims());
}

Cpz unite(const Cpz& S1, const Cpz& S2)
{
    require_same_dims(S1, S2, "unite");
    const int n = S1.dimension();
    const int p1 = S1.num_factors(), p2 = S2.num_factors();
    const int m1 = S1.num_constraints(), m2 = S2.num_constraints();
    const int q1 = S1.num_constraint_terms(), q2 = S2.num_constraint_terms();
    const int l1 = S1.num_generators(), l2 = S2.num_generators();
    const int p = p1 + p2 + 1;
    const int sel = p - 1;  // selector factor: lambda = +1 picks S1, -1 picks S2

    auto lift = [&](const ExponentMatrix& X, int offset, int selector_power) {
        ExponentMatrix out = ExponentMatrix::Zero(p, X.cols());
        out.block(offset, 0, X.rows(), X.cols()) = X;
        out.row(sel).setConstant(selector_power);
        return out;
    };

    // Generators: selector, 1/2 G1 (x1, x lambda), 1/2 G2 (x1, x -lambda).
    const int l = 1 + 2 * l1 + 2 * l2;
    Matrix G(n, l);
    ExponentMatrix E(p, l);
    G << 0.5 * (S1.center() - S2.center()), 0.5 * S1.generators(), 0.5 * S1.generators(), 0.5 * S2.generators(),
        -0.5 * S2.generators();
    ExponentMatrix e_sel = ExponentMatrix::Zero(p, 1);
    e_sel(sel, 0) = 1;
    E << e_sel, lift(S1.exponents(), 0, 0), lift(S1.exponents(), 0, 1), lift(S2.exponents(), p1, 0),
        lift(S2.exponents(), p1, 1);
    Vector c = 0.5 * (S1.center() + S2.center());

    // Constraints gated by (1 +- lambda)/2, plus lambda^2 = 1.
    const int m = m1 + m2 + 1;
    const int q = 2 * q1 + 2 * q2 + 3;
    Matrix A = Matrix::Zero(m, q);
    ExponentMatrix R(p, q);
    A.block(0, 0, m1, q1) = 0.5 * S1.constraint_generators();
    A.block(0, q1, m1, q1) = 0.5 * S1.constraint_generators();
    A.block(m1, 2 * q1, m2, q2) = 0.5 * S2.constraint_generators();
    A.block(m1, 2 * q1 + q2, m2, q2) = -0.5 * S2.constraint_generators();
    const int k_const = 2 * q1 + 2 * q2;
    const int k_lin = k_const + 1;
    const int k_sq = k_const + 2;
    A.block(0, k_const, m1, 1) = -0.5 * S1.constraint_values();
    A.block(0, k_lin, m1, 1) = -0.5 * S1.constraint_values();
    A.block(m1, k_const, m2, 1) = -0.5 * S2.constraint_values();
    A.block(m1, k_lin, m2, 1) = 0.5 * S2.constraint_values();
    A(m - 1, k_sq) = 1.0;
    ExponentMatrix r_const = ExponentMatrix::Zero(p, 1);
    ExponentMatrix r_lin = ExponentMatrix::Zero(p, 1);
    ExponentMatrix r_sq = ExponentMatrix::Zero(p, 1);
    r_lin(sel, 0) = 1;
    r_sq(sel, 0) = 2;
    R << lift(S1.constraint_exponents(), 0, 0), lift(S1.constraint_exponents(), 0, 1),
        lift(S2.constraint_exponents(), p1, 0), lift(S2.constraint_exponents(), p1, 1), r_const, r_lin, r_sq;
    Vector b = Vector::Zero(m);
    b[m - 1] = 1.0;
    return Cpz(std::move(c), std::move(G), std::move(E), std::move(A), std::move(b), std::move(R), S1.dims());
}

Cpz project(const Cpz& S, const std::vector<DimId>& keep)
{
    std::vector<int> rows;
    for (const auto& id : keep) {
        const int i = S.dim_index(id);
        if (i < 0) throw DimensionError("project: unknown dimension '" + id + "'");
        rows.push_back(i);
    }
    Vector c(static_cast<Eigen::Index>(rows.size()));
    Matrix G(static_cast<Eigen::Index>(rows.size()), S.num_generators());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        c[i] = S.center()[rows[i]];
        G.row(i) = S.generators().row(rows[i]);
    }
    return Cpz(std::move(c), std::move(G), S.exponents(), S.constraint_generators(), S.constraint_values(),
               S.constraint_exponents(), keep);
}

std::pair<Cpz, Cpz> unify(const Cpz& S1, const Cpz& S2, const BoundsMap& bounds)
{
    for (const Cpz* S : {&S1, &S2})
        for (const auto& id : S->dims())
            if (!bounds.count(id)) throw DimensionError("unify: no bounds for dimension '" + id + "'");

    const auto& d1 = S1.dims();
    const auto& d2 = S2.dims();
    auto in = [](const std::vector<DimId>& v, const DimId& id) { return std::find(v.begin(), v.end(), id) != v.end(); };
    std::vector<DimId> only1, shared, only2;
    for (const auto& id : d1) (in(d2, id) ? shared : only1).push_back(id);
    for (const auto& id : d2)
        if (!in(d1, id)) only2.push_back(id);

    // Re-expressed set: original dims (in common order) plus spanning
    // generators for `missing`, stacked per `missing_first`.
    auto lift = [&](const Cpz& S, const std::vector<DimId>& own, const std::vector<DimId>& missing, bool missing_first) {
        const int ns = static_cast<int>(own.size());
        const int nm = static_cast<int>(missing.size());
        const int l = S.num_generators();
        const int p = S.num_factors();
        Cpz reordered = project(S, own);

        Vector mid(nm);
        Matrix B = Matrix::Zero(nm, nm);
        for (int j = 0; j < nm; ++j) {
            const auto& info = bounds.at(missing[j]);
            mid[j] = info.midpoint();
            B(j, j) = 0.5 * info.extent();
        }
        Vector c(ns + nm);
        Matrix G = Matrix::Zero(ns + nm, nm + l);
        ExponentMatrix E = ExponentMatrix::Zero(p + nm, nm + l);
        ExponentMatrix R = ExponentMatrix::Zero(p + nm, S.num_constraint_terms());
        std::vector<DimId> dims;
        if (missing_first) {
            c << mid, reordered.center();
            G.block(0, 0, nm, nm) = B;
            G.block(nm, nm, ns, l) = reordered.generators();
            E.block(0, 0, nm, nm).setIdentity();
            E.block(nm, nm, p, l) = S.exponents();
            R.bottomRows(p) = S.constraint_exponents();
            dims = missing;
            dims.insert(dims.end(), own.begin(), own.end());
        } else {
            c << reordered.center(), mid;
            G.block(0, nm, ns, l) = reordered.generators();
            G.block(ns, 0, nm, nm) = B;
            E.block(0, nm, p, l) = S.exponents();
            E.block(p, 0, nm, nm).setIdentity();
            R.topRows(p) = S.constraint_exponents();
            dims = own;
            dims.insert(dims.end(), missing.begin(), missing.end());
        }
        return Cpz(std::move(c), std::move(G), std::move(E), S.constraint_generators(), S.constraint_values(),
                   std::move(R), std::move(dims));
    };

    std::vector<DimId> own1 = only1;
    own1.insert(own1.end(), shared.begin(), shared.end());
    std::vector<DimId> own2 = shared;
    own2.insert(own2.end(), only2.begin(), only2.end());
    return {lift(S1, own1, only2, false), lift(S2, own2, only1, true)};
}

}  // namespace cpzrepair
