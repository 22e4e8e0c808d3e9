#ifndef CPZREPAIR_BOUNDED_LSQ_HPP
#define CPZREPAIR_BOUNDED_LSQ_HPP

// Box-constrained nonlinear least squares (projected Levenberg-Marquardt) and
// an augmented-Lagrangian wrapper for polynomial equality constraints.
//
// Every point-to-CPZ query in this library reduces to one of these two
// problem shapes over the factor box [-1, 1]^p, possibly with some factors
// pinned (lower == upper).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cpzrepair::nlp {

struct LsqOptions
{
    int max_iterations = 200;
    // Stop as soon as 0.5*||r||^2 drops to this value (zero-residual solves).
    double target_cost = 0.0;
    double gradient_tolerance = 1e-13;
    double relative_decrease_tolerance = 1e-14;
};

struct LsqResult
{
    Eigen::VectorXd x;
    double cost = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Minimize 0.5*||r(x)||^2 subject to lower <= x <= upper.
///
/// `residual(x, r, J)` must size and fill r (M) and J (M x P). Bound
/// constraints are handled by freezing variables that sit on an active bound
/// and clamping every trial step back into the box.
template <class ResidualFn>
LsqResult solve_bounded_lsq(ResidualFn&& residual, Eigen::VectorXd x,
                            const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            const LsqOptions& opts = {})
{
    const Eigen::Index P = x.size();
    x = x.cwiseMax(lower).cwiseMin(upper);

    Eigen::VectorXd r, r_trial;
    Eigen::MatrixXd J, J_trial;
    residual(x, r, J);
    double cost = 0.5 * r.squaredNorm();

    LsqResult out;
    double lambda = 1e-3;
    std::vector<Eigen::Index> free_idx;
    free_idx.reserve(static_cast<std::size_t>(P));
    Eigen::VectorXd g, gf, delta, x_trial(P);
    Eigen::MatrixXd H, Hf;

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        if (cost <= opts.target_cost) {
            out.converged = true;
            break;
        }
        g.noalias() = J.transpose() * r;

        free_idx.clear();
        double pg = 0.0;
        for (Eigen::Index i = 0; i < P; ++i) {
            if (lower[i] >= upper[i]) continue;
            const bool at_lo = x[i] <= lower[i] && g[i] > 0.0;
            const bool at_hi = x[i] >= upper[i] && g[i] < 0.0;
            if (at_lo || at_hi) continue;
            free_idx.push_back(i);
            pg = std::max(pg, std::abs(g[i]));
        }
        if (free_idx.empty() || pg <= opts.gradient_tolerance) {
            out.converged = true;
            break;
        }

        const auto k = static_cast<Eigen::Index>(free_idx.size());
        H.noalias() = J.transpose() * J;
        Hf.resize(k, k);
        gf.resize(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            gf[a] = g[free_idx[a]];
            for (Eigen::Index b = 0; b < k; ++b) Hf(a, b) = H(free_idx[a], free_idx[b]);
        }

        bool accepted = false;
        double cost_trial = cost;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::MatrixXd M = Hf;
            for (Eigen::Index a = 0; a < k; ++a) M(a, a) += lambda * (Hf(a, a) + 1e-10);
            delta = M.ldlt().solve(-gf);
            x_trial = x;
            for (Eigen::Index a = 0; a < k; ++a) x_trial[free_idx[a]] += delta[a];
            x_trial = x_trial.cwiseMax(lower).cwiseMin(upper);
            residual(x_trial, r_trial, J_trial);
            cost_trial = 0.5 * r_trial.squaredNorm();
            if (std::isfinite(cost_trial) && cost_trial < cost) {
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            out.converged = true;  // no descent direction left at this scale
            break;
        }
        const double decrease = cost - cost_trial;
        x.swap(x_trial);
        r.swap(r_trial);
        J.swap(J_trial);
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        if (decrease <= opts.relative_decrease_tolerance * std::max(cost, 1e-300) &&
            cost > opts.target_cost) {
            out.converged = true;
            ++it;
            break;
        }
    }
    out.x = std::move(x);
    out.cost = cost;
    out.iterations = it;
    return out;
}

struct AugLagOptions
{
    LsqOptions inner;
    int max_outer = 25;
    double feasibility_tolerance = 1e-6;
    double initial_penalty = 10.0;
    double max_penalty = 1e12;
    double settle_tolerance = 1e-6;  // relative objective change
};

struct AugLagResult
{
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::infinity();  // ||F(x)||^2
    double infeasibility = std::numeric_limits<double>::infinity();  // ||C(x)||_inf
    bool feasible = false;
};

/// Minimize ||F(x)||^2 subject to C(x) = 0 and box bounds.
///
/// `fn(x, F, JF, C, JC)` fills the objective residual and the equality
/// residual with their Jacobians.
template <class Fn>
AugLagResult solve_equality_lsq(Fn&& fn, Eigen::VectorXd x, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, const AugLagOptions& opts = {})
{
    Eigen::VectorXd F, C, y;
    Eigen::MatrixXd JF, JC;
    double mu = opts.initial_penalty;
    double prev_infeas = std::numeric_limits<double>::infinity();
    double prev_objective = std::numeric_limits<double>::infinity();

    AugLagResult out;
    for (int outer = 0; outer < opts.max_outer; ++outer) {
        const double sqrt_mu = std::sqrt(mu);
        auto merit = [&](const Eigen::VectorXd& a, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
            fn(a, F, JF, C, JC);
            if (y.size() != C.size()) y = Eigen::VectorXd::Zero(C.size());
            const Eigen::Index nf = F.size();
            const Eigen::Index nc = C.size();
            r.resize(nf + nc);
            J.resize(nf + nc, a.size());
            r.head(nf) = F;
            r.tail(nc) = sqrt_mu * (C + y / mu);
            J.topRows(nf) = JF;
            J.bottomRows(nc) = sqrt_mu * JC;
        };
        LsqResult inner = solve_bounded_lsq(merit, x, lower, upper, opts.inner);
        x = std::move(inner.x);
        fn(x, F, JF, C, JC);
        const double infeas = C.size() ? C.cwiseAbs().maxCoeff() : 0.0;
        out.x = x;
        out.objective = F.squaredNorm();
        out.infeasibility = infeas;
        if (infeas <= 0.1 * opts.feasibility_tolerance) break;
        // Feasible and the objective has settled: degenerate feasible sets
        // (isolated points) otherwise crawl through every outer iteration.
        if (infeas <= opts.feasibility_tolerance &&
            std::abs(out.objective - prev_objective) <= opts.settle_tolerance * std::max(out.objective, 1e-12))
            break;
        prev_objective = out.objective;
        if (y.size() != C.size()) y = Eigen::VectorXd::Zero(C.size());
        y += mu * C;
        if (infeas > 0.25 * prev_infeas) mu = std::min(mu * 10.0, opts.max_penalty);
        prev_infeas = infeas;
    }
    out.feasible = out.infeasibility <= opts.feasibility_tolerance;
    return out;
}

}  // namespace cpzrepair::nlp

#endif  // CPZREPAIR_BOUNDED_LSQ_HPP
