#include "cpzrepair/repair.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <unordered_map>

namespace cpzrepair {

std::vector<std::string> ActionModel::object_params() const
{
    std::vector<std::string> out;
    for (const auto& p : params)
        if (p.kind == ParamKind::ObjectRef) out.push_back(p.name);
    return out;
}

const char* label_name(RepairLabel label)
{
    return label == RepairLabel::ShouldExclude ? "should_exclude" : "should_include";
}

const char* edit_op_name(EditOp op)
{
    switch (op) {
    case EditOp::Param: return "param";
    case EditOp::Remove: return "remove";
    case EditOp::Add: return "add";
    case EditOp::Replace: return "replace";
    }
    return "?";
}

EvalContext bind(const EvalContext& base, const Observation& h)
{
    EvalContext c = base;
    c.theta = h.theta;
    return c;
}

bool unexpected(const ActionModel& model, const Observation& h, const EvalContext& ctx)
{
    const EvalContext c = bind(ctx, h);
    const bool holds = eval_formula(model.constraint, h.q, c);
    if (same_state(h.q, h.q_next)) return holds;
    if (!holds) return true;
    return !eval_formula(model.effect, h.q_next, h.q, c);
}

// ---------------------------------------------------------------------------
// Error

namespace {

// What one observation demands of the formula under a label.
struct Demand
{
    const Observation* h = nullptr;
    const State* point = nullptr;  // state tested for membership
    bool required = false;         // must be inside
    int index = -1;
};

std::vector<Demand> demands(const std::vector<Observation>& obs, RepairLabel label)
{
    std::vector<Demand> out;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& h = obs[i];
        const bool moved = !same_state(h.q, h.q_next);
        if (label == RepairLabel::ShouldExclude)
            out.push_back({&h, &h.q, moved, static_cast<int>(i)});
        else if (moved)
            out.push_back({&h, &h.q_next, true, static_cast<int>(i)});
    }
    return out;
}

// Per-element answers for one demand set. A cover element depends only on
// its own conjunct and the observation, so results are shared between the
// many candidate formulas a search visits.
class Memo
{
public:
    struct Element
    {
        Cpz region;
        Vector point;
        bool inside = false;
        std::optional<SetDistance> distance, depth;
    };

    Element& get(const std::vector<Atom>& conj, const Demand& d, const EvalContext& c)
    {
        Formula g;
        g.disjuncts.push_back(conj);
        std::string key = print_formula(g) + '#' + std::to_string(d.index);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        if (cache_.size() > 50000) cache_.clear();
        Cpz region = formula_region(g, d.h->q, c).front();
        Vector point = point_in(region, transformed_values(g, *d.point, c));
        const bool inside = contains(region, point, c.solver);
        return cache_.try_emplace(std::move(key), Element{std::move(region), std::move(point), inside, {}, {}})
            .first->second;
    }

    const SetDistance& distance(Element& e, const EvalContext& c)
    {
        if (!e.distance) e.distance = distance_to_set(e.region, e.point, c.solver);
        return *e.distance;
    }

    const SetDistance& depth(Element& e, const std::vector<Atom>& conj, const EvalContext& c)
    {
        if (!e.depth) {
            Formula g;
            g.disjuncts.push_back(conj);
            DepthOptions opts;
            opts.quantized_dims = quantized_dims(g, c);
            e.depth = boundary_depth(e.region, e.point, opts, c.solver);
        }
        return *e.depth;
    }

private:
    std::unordered_map<std::string, Element> cache_;
};

bool inside_any(const Formula& f, const Demand& d, const EvalContext& c, Memo& memo)
{
    for (const auto& conj : f.disjuncts)
        if (memo.get(conj, d, c).inside) return true;
    return false;
}

int count_misclassified(const Formula& f, const std::vector<Demand>& ds, const EvalContext& ctx, Memo& memo)
{
    int n = 0;
    for (const auto& d : ds) {
        const EvalContext c = bind(ctx, *d.h);
        if (inside_any(f, d, c, memo) != d.required) ++n;
    }
    return n;
}

ErrorReport error_of(const Formula& f, const std::vector<Demand>& ds, const EvalContext& ctx, Memo& memo)
{
    ErrorReport rep;
    for (const auto& d : ds) {
        const EvalContext c = bind(ctx, *d.h);
        if (inside_any(f, d, c, memo) == d.required) continue;
        rep.misclassified.push_back(d.index);
        if (d.required) {
            double best = std::numeric_limits<double>::infinity();
            bool confident = false;
            for (const auto& conj : f.disjuncts) {
                const auto& dist = memo.distance(memo.get(conj, d, c), c);
                if (dist.squared < best) {
                    best = dist.squared;
                    confident = dist.confident;
                }
            }
            rep.total += best;
            rep.low_confidence = rep.low_confidence || !confident;
        } else {
            for (const auto& conj : f.disjuncts) {
                auto& e = memo.get(conj, d, c);
                if (!e.inside) continue;
                const auto& dep = memo.depth(e, conj, c);
                rep.total += dep.squared;
                rep.low_confidence = rep.low_confidence || !dep.confident;
            }
        }
    }
    return rep;
}

}  // namespace

ErrorReport formula_error(const Formula& f, const std::vector<Observation>& obs, RepairLabel label,
                          const EvalContext& ctx)
{
    Memo memo;
    return error_of(f, demands(obs, label), ctx, memo);
}

double error(const Formula& f, const std::vector<Observation>& obs, RepairLabel label, const EvalContext& ctx)
{
    return formula_error(f, obs, label, ctx).total;
}

// ---------------------------------------------------------------------------
// Edits

std::vector<Edit> generate_edits(const Formula& f, const std::vector<int>& misclassified,
                                 const TemplateRegistry& registry)
{
    std::vector<Edit> out;
    if (misclassified.empty()) return out;
    auto has_continuous = [&](const Atom& a) {
        const auto& spec = registry.at(a.predicate).params();
        return std::any_of(spec.begin(), spec.end(), [](const ParamSpec& p) { return p.kind == ParamKind::Continuous; });
    };
    for (int d = 0; d < static_cast<int>(f.disjuncts.size()); ++d)
        for (int a = 0; a < static_cast<int>(f.disjuncts[d].size()); ++a)
            if (has_continuous(f.disjuncts[d][a])) out.push_back({EditOp::Param, d, a, {}});
    for (int d = 0; d < static_cast<int>(f.disjuncts.size()); ++d)
        for (int a = 0; a < static_cast<int>(f.disjuncts[d].size()); ++a) out.push_back({EditOp::Remove, d, a, {}});
    for (const auto& t : registry.all()) {
        for (int d = 0; d < static_cast<int>(f.disjuncts.size()); ++d) out.push_back({EditOp::Add, d, -1, t->name()});
        out.push_back({EditOp::Add, -1, -1, t->name()});
    }
    for (int d = 0; d < static_cast<int>(f.disjuncts.size()); ++d)
        for (int a = 0; a < static_cast<int>(f.disjuncts[d].size()); ++a)
            for (const auto& t : registry.all()) out.push_back({EditOp::Replace, d, a, t->name()});
    return out;
}

namespace {

// Every assignment of the non-continuous parameters of template t.
std::vector<std::vector<Arg>> reference_assignments(const PredicateTemplate& t, const Atom& current,
                                                    const EvalContext& ctx, const RepairOptions& opts)
{
    const auto& spec = t.params();
    std::vector<std::vector<Arg>> out{{}};
    for (std::size_t i = 0; i < spec.size(); ++i) {
        std::vector<std::vector<Arg>> next;
        for (const auto& partial : out) {
            std::vector<Arg> choices;
            switch (spec[i].kind) {
            case ParamKind::Continuous: {
                double v = 0.5 * (spec[i].lower + spec[i].upper);
                if (current.predicate == t.name() && i < current.args.size()) v = current.args[i].value;
                choices.push_back(Arg::number(v));
                break;
            }
            case ParamKind::ObjectRef:
                if (opts.object_params.empty())
                    for (const auto& o : ctx.space->objects()) choices.push_back(Arg::ref(o.name));
                else
                    for (const auto& name : opts.object_params) choices.push_back(Arg::ref(name));
                break;
            case ParamKind::RobotRef: choices.push_back(Arg::ref(ctx.space->robot_name())); break;
            case ParamKind::SymbolRef:
                for (const auto& s : ctx.space->symbols()) choices.push_back(Arg::ref(s.name));
                break;
            case ParamKind::Discrete: {
                const int si = ctx.space->symbol_index(partial[spec[i].domain_of].text);
                for (const auto& v : ctx.space->symbols()[si].domain) choices.push_back(Arg::ref(v));
                break;
            }
            }
            for (const auto& c : choices) {
                auto extended = partial;
                extended.push_back(c);
                next.push_back(std::move(extended));
            }
        }
        out = std::move(next);
    }
    return out;
}

// Object references resolve through θ, so validate under an observation's
// binding when the caller's context has none.
bool formula_valid(const Formula& f, const EvalContext& ctx, const std::vector<Observation>& obs)
{
    try {
        validate_formula(f, obs.empty() ? ctx : bind(ctx, obs.front()));
        return true;
    } catch (const std::invalid_argument&) {
        return false;
    }
}

// One-dimensional search over continuous parameter k of atom (d, a).
// Classification only changes where some observation sits on the atom's
// boundary, so the misclassification count is constant between those
// breakpoints; zero-count intervals give zero error.
ParamResult line_search(Formula g, int d, int a, int k, const std::vector<Demand>& ds, const EvalContext& ctx,
                        const RepairOptions& opts, std::optional<double> reference, Memo& memo)
{
    const auto& t = ctx.registry->at(g.disjuncts[d][a].predicate);
    const auto& spec = t.params()[k];
    const double lo = spec.lower, hi = spec.upper;
    auto at = [&](double v) {
        g.disjuncts[d][a].args[k].value = v;
        return g;
    };
    const double ref = std::clamp(reference.value_or(g.disjuncts[d][a].args[k].value), lo, hi);

    std::vector<double> cuts;
    for (const auto& dm : ds) {
        const EvalContext c = bind(ctx, *dm.h);
        for (double s : t.seeds(g.disjuncts[d][a], c, dm.h->q, *dm.point))
            if (s > lo && s < hi) cuts.push_back(s);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    constexpr std::size_t kMaxCuts = 48;
    if (cuts.size() > kMaxCuts) {
        std::vector<double> thinned;
        for (std::size_t i = 0; i < kMaxCuts; ++i) thinned.push_back(cuts[i * (cuts.size() - 1) / (kMaxCuts - 1)]);
        cuts = std::move(thinned);
    }
    std::vector<double> edges{lo};
    edges.insert(edges.end(), cuts.begin(), cuts.end());
    edges.push_back(hi);

    struct Interval
    {
        double l, u;
        int count;
    };
    std::vector<Interval> iv;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (edges[i + 1] - edges[i] <= 1e-12) continue;
        const double mid = 0.5 * (edges[i] + edges[i + 1]);
        iv.push_back({edges[i], edges[i + 1], count_misclassified(at(mid), ds, ctx, memo)});
    }
    if (iv.empty()) return {at(ref), error_of(at(ref), ds, ctx, memo).total};
    int best_count = iv.front().count;
    for (const auto& x : iv) best_count = std::min(best_count, x.count);

    auto gap = [&](double l, double u) { return ref < l ? l - ref : (ref > u ? ref - u : 0.0); };

    if (best_count == 0) {
        // Merge neighbouring zero-count intervals, take the plateau nearest
        // the reference and stay a margin inside its edges.
        std::vector<std::pair<double, double>> plateaus;
        for (const auto& x : iv) {
            if (x.count != 0) continue;
            if (!plateaus.empty() && plateaus.back().second == x.l)
                plateaus.back().second = x.u;
            else
                plateaus.emplace_back(x.l, x.u);
        }
        auto pick = plateaus.front();
        for (const auto& p : plateaus)
            if (gap(p.first, p.second) < gap(pick.first, pick.second)) pick = p;
        const double m = std::max(opts.plateau_margin * (pick.second - pick.first), 1e-9);
        const double l = std::min(pick.first + m, 0.5 * (pick.first + pick.second));
        const double u = std::max(pick.second - m, 0.5 * (pick.first + pick.second));
        const double v = std::clamp(ref, l, u);
        Formula out = at(v);
        return {out, error_of(out, ds, ctx, memo).total};
    }

    // No zero-error value: score the least-misclassifying intervals by
    // error and refine the best one by golden-section search.
    std::vector<Interval> cand;
    for (const auto& x : iv)
        if (x.count == best_count) cand.push_back(x);
    std::stable_sort(cand.begin(), cand.end(), [&](const Interval& x, const Interval& y) {
        return gap(x.l, x.u) < gap(y.l, y.u);
    });
    if (cand.size() > 6) cand.resize(6);
    double best_err = std::numeric_limits<double>::infinity();
    double best_v = ref;
    Interval best_iv = cand.front();
    for (const auto& x : cand) {
        const double mid = 0.5 * (x.l + x.u);
        const double e = error_of(at(mid), ds, ctx, memo).total;
        if (e < best_err) {
            best_err = e;
            best_v = mid;
            best_iv = x;
        }
    }
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double l = best_iv.l, u = best_iv.u;
    double x1 = u - phi * (u - l), x2 = l + phi * (u - l);
    double f1 = error_of(at(x1), ds, ctx, memo).total, f2 = error_of(at(x2), ds, ctx, memo).total;
    for (int it = 0; it < 12; ++it) {
        if (f1 <= f2) {
            u = x2;
            x2 = x1;
            f2 = f1;
            x1 = u - phi * (u - l);
            f1 = error_of(at(x1), ds, ctx, memo).total;
        } else {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + phi * (u - l);
            f2 = error_of(at(x2), ds, ctx, memo).total;
        }
    }
    if (f1 < best_err) {
        best_err = f1;
        best_v = x1;
    }
    if (f2 < best_err) {
        best_err = f2;
        best_v = x2;
    }
    return {at(best_v), best_err};
}

ParamResult optimize_impl(const Formula& f, int disjunct, int atom, const std::vector<Observation>& obs,
                          const std::vector<Demand>& ds, RepairLabel label, const EvalContext& ctx,
                          const RepairOptions& opts, int seed_observation, Memo& memo)
{
    const Atom& current = f.disjuncts.at(disjunct).at(atom);
    const auto& t = ctx.registry->at(current.predicate);
    const auto& spec = t.params();
    std::vector<int> continuous;
    for (std::size_t i = 0; i < spec.size(); ++i)
        if (spec[i].kind == ParamKind::Continuous) continuous.push_back(static_cast<int>(i));

    std::optional<ParamResult> best;
    for (const auto& args : reference_assignments(t, current, ctx, opts)) {
        Formula g = f;
        g.disjuncts[disjunct][atom].args = args;
        if (!formula_valid(g, ctx, obs)) continue;
        ParamResult r{g, 0.0};
        if (continuous.empty()) {
            r.error = error_of(g, ds, ctx, memo).total;
        } else {
            // Coordinate-wise over the continuous parameters.
            const int sweeps = continuous.size() > 1 ? 2 : 1;
            for (int sweep = 0; sweep < sweeps; ++sweep)
                for (int k : continuous) {
                    std::optional<double> ref;
                    if (seed_observation >= 0 && seed_observation < static_cast<int>(obs.size())) {
                        const auto& h = obs[seed_observation];
                        const EvalContext c = bind(ctx, h);
                        const bool effect = label == RepairLabel::ShouldInclude;
                        auto s = t.seeds(r.formula.disjuncts[disjunct][atom], c, h.q, effect ? h.q_next : h.q);
                        std::size_t slot = 0;
                        for (int kk : continuous) {
                            if (kk == k) break;
                            ++slot;
                        }
                        if (slot < s.size()) ref = s[slot];
                    }
                    r = line_search(r.formula, disjunct, atom, k, ds, ctx, opts, ref, memo);
                }
        }
        if (!best || r.error < best->error) best = std::move(r);
    }
    if (!best) return {f, error_of(f, ds, ctx, memo).total};
    return *best;
}

}  // namespace

ParamResult optimize_params(const Formula& f, int disjunct, int atom, const std::vector<Observation>& obs,
                            RepairLabel label, const EvalContext& ctx, const RepairOptions& opts,
                            int seed_observation)
{
    Memo memo;
    return optimize_impl(f, disjunct, atom, obs, demands(obs, label), label, ctx, opts, seed_observation, memo);
}

namespace {

// New atom of template `name` with placeholder arguments.
Atom placeholder(const PredicateTemplate& t, const EvalContext& ctx, const RepairOptions& opts)
{
    return {t.name(), reference_assignments(t, Atom{}, ctx, opts).front()};
}

bool degenerate(const Formula& f, const std::vector<Observation>& obs, const EvalContext& ctx)
{
    if (obs.empty()) return false;
    const EvalContext c = bind(ctx, obs.front());
    for (const auto& S : formula_region(f, obs.front().q, c))
        if (!is_empty(S, c.solver.restarts, c.solver)) return false;
    return true;
}

struct Applied
{
    Formula formula;
    int disjunct = -1, atom = -1;  // atom whose parameters were just optimized
};

std::optional<Applied> apply(const Formula& f, const Edit& e, const std::vector<Observation>& obs,
                             const std::vector<Demand>& ds, RepairLabel label, const EvalContext& ctx,
                             const RepairOptions& opts, int seed, Memo& memo)
{
    Applied out;
    switch (e.op) {
    case EditOp::Param: {
        out.formula = optimize_impl(f, e.disjunct, e.atom, obs, ds, label, ctx, opts, -1, memo).formula;
        out.disjunct = e.disjunct;
        out.atom = e.atom;
        break;
    }
    case EditOp::Remove: {
        out.formula = f;
        auto& conj = out.formula.disjuncts[e.disjunct];
        conj.erase(conj.begin() + e.atom);
        if (conj.empty()) out.formula.disjuncts.erase(out.formula.disjuncts.begin() + e.disjunct);
        if (out.formula.disjuncts.empty()) return std::nullopt;
        break;
    }
    case EditOp::Add:
    case EditOp::Replace: {
        Formula g = f;
        const Atom fresh = placeholder(ctx.registry->at(e.predicate), ctx, opts);
        if (e.op == EditOp::Replace) {
            g.disjuncts[e.disjunct][e.atom] = fresh;
            out.disjunct = e.disjunct;
            out.atom = e.atom;
        } else if (e.disjunct < 0) {
            g.disjuncts.push_back({fresh});
            out.disjunct = static_cast<int>(g.disjuncts.size()) - 1;
            out.atom = 0;
        } else {
            g.disjuncts[e.disjunct].push_back(fresh);
            out.disjunct = e.disjunct;
            out.atom = static_cast<int>(g.disjuncts[e.disjunct].size()) - 1;
        }
        out.formula = optimize_impl(g, out.disjunct, out.atom, obs, ds, label, ctx, opts, seed, memo).formula;
        break;
    }
    }
    if (!formula_valid(out.formula, ctx, obs)) return std::nullopt;
    if (degenerate(out.formula, obs, ctx)) return std::nullopt;
    return out;
}

}  // namespace

std::optional<Formula> apply_edit(const Formula& f, const Edit& e, const std::vector<Observation>& obs,
                                  RepairLabel label, const EvalContext& ctx, const RepairOptions& opts,
                                  int seed_observation)
{
    Memo memo;
    auto r = apply(f, e, obs, demands(obs, label), label, ctx, opts, seed_observation, memo);
    if (!r) return std::nullopt;
    return std::move(r->formula);
}

// ---------------------------------------------------------------------------
// Anytime search

RepairResult repair(const Formula& f, const std::vector<Observation>& obs, RepairLabel label, const EvalContext& ctx,
                    const RepairOptions& opts)
{
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

    RepairResult res;
    res.best = f;
    const auto ds = demands(obs, label);
    Memo memo;
    const ErrorReport initial = error_of(f, ds, ctx, memo);
    res.initial_error = res.best_error = initial.total;

    struct Entry
    {
        Formula base;
        Edit edit;
        int seed;
    };
    std::deque<Entry> queues[4];  // param < remove < add < replace
    std::set<std::string> expanded{print_formula(f)};

    auto expand = [&](const Formula& base, const std::vector<int>& mis, int skip_d, int skip_a) {
        const int seed = mis.empty() ? -1 : mis.front();
        for (const auto& e : generate_edits(base, mis, *ctx.registry)) {
            if (e.op == EditOp::Param && e.disjunct == skip_d && e.atom == skip_a) continue;
            queues[static_cast<int>(e.op)].push_back({base, e, seed});
        }
    };
    expand(f, initial.misclassified, -1, -1);

    for (;;) {
        if (res.best_error <= opts.zero_error) break;
        if (opts.budget_edits >= 0 && res.evaluated >= opts.budget_edits) break;
        if (opts.budget_s > 0.0 && elapsed() > opts.budget_s) break;
        std::deque<Entry>* q = nullptr;
        for (auto& cls : queues)
            if (!cls.empty()) {
                q = &cls;
                break;
            }
        if (!q) break;
        Entry entry = std::move(q->front());
        q->pop_front();

        auto applied = apply(entry.base, entry.edit, obs, ds, label, ctx, opts, entry.seed, memo);
        if (!applied) continue;
        ++res.evaluated;
        const ErrorReport rep = error_of(applied->formula, ds, ctx, memo);
        if (rep.total <= res.best_error && expanded.insert(print_formula(applied->formula)).second)
            expand(applied->formula, rep.misclassified, applied->disjunct, applied->atom);
        if (rep.total < res.best_error) {
            res.best_error = rep.total;
            res.best = applied->formula;
            ++res.applied;
        }
        res.steps.push_back({res.evaluated, res.applied, rep.total, res.best_error, elapsed(),
                             print_formula(res.best), entry.edit});
    }
    return res;
}

std::vector<Observation> subsample(const std::vector<Observation>& expected,
                                   const std::vector<Observation>& unexpected_obs, Rng& rng)
{
    std::vector<Observation> out = unexpected_obs;
    if (unexpected_obs.empty()) return {};
    std::vector<std::size_t> idx(expected.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t take = std::min(expected.size(), unexpected_obs.size());
    // Partial Fisher-Yates with an explicit distribution so results do not
    // depend on the standard library's shuffle.
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.push_back(expected[idx[i]]);
    }
    return out;
}

ActionRepair repair_action(const ActionModel& model, const std::vector<Observation>& history, const EvalContext& ctx,
                           const RepairOptions& opts, Rng& rng)
{
    std::vector<Observation> U, E;
    for (const auto& h : history) (unexpected(model, h, ctx) ? U : E).push_back(h);

    ActionRepair out;
    out.model = model;
    out.sample = subsample(E, U, rng);

    RepairOptions half = opts;
    half.budget_s = opts.budget_s > 0.0 ? 0.5 * opts.budget_s : opts.budget_s;
    RepairOptions c_opts = half, e_opts = half;
    if (opts.budget_edits >= 0) {
        c_opts.budget_edits = opts.budget_edits - opts.budget_edits / 2;
        e_opts.budget_edits = opts.budget_edits / 2;
    }
    out.constraint = repair(model.constraint, out.sample, RepairLabel::ShouldExclude, ctx, c_opts);
    out.effect = repair(model.effect, out.sample, RepairLabel::ShouldInclude, ctx, e_opts);

    out.constraint_candidate_error = out.constraint.best_error + out.effect.initial_error;
    out.effect_candidate_error = out.constraint.initial_error + out.effect.best_error;
    if (out.constraint_candidate_error <= out.effect_candidate_error) {
        out.adopted = RepairLabel::ShouldExclude;
        out.model.constraint = out.constraint.best;
    } else {
        out.adopted = RepairLabel::ShouldInclude;
        out.model.effect = out.effect.best;
    }
    return out;
}

}  // namespace cpzrepair
