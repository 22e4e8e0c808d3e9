#include "cpzrepair/counterexample_sampling.hpp"

#include <stdexcept>

namespace cpzrepair {

void SamplerConfig::validate() const
{
    if (!(p_naive >= 0.0 && p_naive <= 1.0)) throw std::invalid_argument("p_naive must lie in [0, 1]");
    if (max_rejections < 1) throw std::invalid_argument("max_rejections must be >= 1");
}

ParamBinding sample_theta(const std::vector<ParamSpec>& params, const StateSpace& space, Rng& rng)
{
    ParamBinding theta;
    for (const auto& p : params) {
        if (p.kind != ParamKind::ObjectRef) continue;
        if (space.objects().empty()) throw std::invalid_argument("no objects to bind '" + p.name + "'");
        std::uniform_int_distribution<std::size_t> pick(0, space.objects().size() - 1);
        theta[p.name] = space.objects()[pick(rng)].name;
    }
    return theta;
}

namespace {

constexpr int kAttempts = 8;

State base_state(const StateSpace& space, Rng& rng, const State* world)
{
    State s = sample_state(space, rng);
    if (world) s.objects = world->objects;
    return s;
}

// Write a region point back into the state, atom by atom.
void pull_back(const Formula& f, int disjunct, const Cpz& S, const Vector& x, const EvalContext& ctx, State& s)
{
    for (const auto& atom : f.disjuncts[disjunct]) {
        const auto& t = ctx.registry->at(atom.predicate);
        const auto dims = t.dims(atom, ctx);
        Vector v(static_cast<Eigen::Index>(dims.size()));
        for (std::size_t i = 0; i < dims.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[S.dim_index(dims[i].id)];
        t.pullback(atom, ctx, v, s);
    }
}

}  // namespace

Sample naive_sample(const Formula& f, const EvalContext& ctx, const std::vector<ParamSpec>& params, Rng& rng,
                    const State* world)
{
    const StateSpace& space = *ctx.space;
    Sample out;
    out.theta = sample_theta(params, space, rng);
    EvalContext c = ctx;
    c.theta = out.theta;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        State s = base_state(space, rng, world);
        const auto cover = formula_region(f, s, c);
        std::uniform_int_distribution<std::size_t> pick(0, cover.size() - 1);
        const std::size_t k = pick(rng);
        const auto x = sample_point(cover[k], rng, c.solver.restarts, c.solver);
        if (!x) continue;
        pull_back(f, static_cast<int>(k), cover[k], *x, c, s);
        if (space.valid(s) && eval_formula(f, s, c)) {
            out.state = std::move(s);
            return out;
        }
    }
    out.state = base_state(space, rng, world);
    out.fallback = true;
    return out;
}

ActiveSampler::ActiveSampler(SamplerConfig cfg) : cfg_(cfg)
{
    cfg_.validate();
}

Sample ActiveSampler::next(const Formula& phi_old, const Formula& phi_new, const EvalContext& ctx,
                           const std::vector<ParamSpec>& params, Rng& rng, const State* world)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool naive = u(rng) < cfg_.p_naive;
    const bool old_first = old_first_;
    old_first_ = !old_first_;
    // Identical formulas have an empty difference; every rejection would fail.
    if (naive || phi_old == phi_new) return naive_sample(phi_new, ctx, params, rng, world);

    const Formula& from = old_first ? phi_old : phi_new;
    const Formula& other = old_first ? phi_new : phi_old;
    for (int i = 0; i < cfg_.max_rejections; ++i) {
        Sample s = naive_sample(from, ctx, params, rng, world);
        if (s.fallback) break;
        EvalContext c = ctx;
        c.theta = s.theta;
        if (!eval_formula(other, s.state, c)) {
            s.naive = false;
            return s;
        }
    }
    return naive_sample(phi_new, ctx, params, rng, world);
}

}  // namespace cpzrepair
