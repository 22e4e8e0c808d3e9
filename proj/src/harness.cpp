#include "cpzrepair/harness.hpp"
#include "cpzrepair/text_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

namespace cpzrepair {

State pick_effect(const State& q, const ParamBinding& theta, const EvalContext& ctx)
{
    const StateSpace& space = *ctx.space;
    EvalContext c = ctx;
    c.theta = theta;
    const int obj = c.object(Arg::ref("obj"));
    State out = q;
    for (const char* axis : {"x", "y", "z", "roll"})
        out.objects[obj][space.object_dim_index(obj, axis)] = q.robot[space.robot_dim_index(axis)];
    const int empty = space.symbol_index(space.robot_name() + "-empty");
    out.symbols[empty] = space.symbols()[empty].code("false");
    return out;
}

SimulatedController pick_controller(Formula truth)
{
    return {"pick", {{"obj", ParamKind::ObjectRef}}, std::move(truth), pick_effect};
}

State execute_controller(const SimulatedController& ctrl, const State& q, const ParamBinding& theta,
                         const EvalContext& ctx)
{
    EvalContext c = ctx;
    c.theta = theta;
    for (const auto& p : ctrl.params)
        if (p.kind == ParamKind::ObjectRef) c.object(Arg::ref(p.name));  // throws on unknown objects
    if (!eval_formula(ctrl.truth, q, c)) return q;
    return ctrl.effect(q, theta, c);
}

const char* experiment_name(ExperimentId id)
{
    switch (id) {
    case ExperimentId::Param: return "param";
    case ExperimentId::Missing: return "missing";
    case ExperimentId::Multiple: return "multiple";
    }
    return "?";
}

ExperimentId experiment_from_name(const std::string& name)
{
    for (auto id : {ExperimentId::Param, ExperimentId::Missing, ExperimentId::Multiple})
        if (name == experiment_name(id)) return id;
    throw std::invalid_argument("unknown experiment '" + name + "' (param, missing, multiple)");
}

void ExperimentConfig::validate() const
{
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (stop.max_unexpected < 1) throw std::invalid_argument("max_unexpected must be >= 1");
    if (stop.max_consecutive_expected == 0 || stop.max_consecutive_expected < -1)
        throw std::invalid_argument("max_consecutive_expected must be >= 1 or -1");
    if (stop.max_samples < 1) throw std::invalid_argument("max_samples must be >= 1");
    if (repair.budget_s <= 0.0 && repair.budget_edits < 0)
        throw std::invalid_argument("need a positive time budget or an edit budget");
    if (repair.budget_edits < -1) throw std::invalid_argument("budget_edits must be >= 0 (or -1 for none)");
    if (!(repair.plateau_margin >= 0.0 && repair.plateau_margin < 0.5))
        throw std::invalid_argument("plateau_margin must lie in [0, 0.5)");
    if (!(repair.zero_error >= 0.0)) throw std::invalid_argument("zero_error must be >= 0");
    if (num_objects < 1) throw std::invalid_argument("num_objects must be >= 1");
    if (!(half_extent > 0.0)) throw std::invalid_argument("half_extent must be > 0");
    sampler.validate();
}

ExperimentConfig default_config(ExperimentId id)
{
    ExperimentConfig cfg;
    cfg.experiment = id;
    switch (id) {
    case ExperimentId::Param:
        cfg.trials = 10;
        cfg.stop = {5, -1, 5000};
        break;
    case ExperimentId::Missing:
        cfg.trials = 20;
        cfg.stop = {10, -1, 5000};
        break;
    case ExperimentId::Multiple:
        cfg.trials = 20;
        cfg.stop = {100, 1000, 50000};
        break;
    }
    return cfg;
}

ExperimentSetup experiment_setup(ExperimentId id)
{
    const auto& reg = builtin_registry();
    auto model = [&](const std::string& constraint) {
        return ActionModel{"pick", {{"obj", ParamKind::ObjectRef}}, parse_formula(constraint, reg),
                           parse_formula("(symbol manip-empty false)", reg)};
    };
    switch (id) {
    case ExperimentId::Param:
        return {model("(dist obj manip 0.5)"), pick_controller(parse_formula("(dist obj manip 0.1)", reg)), false,
                0.1};
    case ExperimentId::Missing:
        return {model("(dist obj manip 0.1)"),
                pick_controller(parse_formula("(and (dist obj manip 0.1) (roll obj manip 0.1))", reg)), true,
                std::nullopt};
    case ExperimentId::Multiple:
        return {model("(dist obj manip 0.7)"),
                pick_controller(
                    parse_formula("(and (dist obj manip 0.1) (roll obj manip 0.1) (empty manip))", reg)),
                true, std::nullopt};
    }
    throw std::invalid_argument("unknown experiment");
}

namespace {

std::optional<double> param_error(const ExperimentSetup& setup, const Formula& f)
{
    if (!setup.true_radius) return std::nullopt;
    for (const auto& conj : f.disjuncts)
        for (const auto& a : conj)
            if (a.predicate == "dist") return std::abs(a.args[2].value - *setup.true_radius);
    return std::nullopt;
}

constexpr double kZero = 1e-6;

}  // namespace

TrialResult run_repair_loop(const ExperimentSetup& setup, const ExperimentConfig& cfg, const EvalContext& ctx,
                            const State& world, int trial, Rng& rng)
{
    TrialResult out;
    out.model = setup.initial;
    out.world = world;
    ActiveSampler sampler(cfg.sampler);
    Formula phi_old = out.model.constraint;
    const bool timed = cfg.repair.budget_s > 0.0;
    int consecutive = 0;

    while (out.samples < cfg.stop.max_samples) {
        const Sample s = setup.active_sampling
                             ? sampler.next(phi_old, out.model.constraint, ctx, out.model.params, rng, &world)
                             : naive_sample(out.model.constraint, ctx, out.model.params, rng, &world);
        ++out.samples;
        Observation h{out.model.name, s.state, s.theta, execute_controller(setup.controller, s.state, s.theta, ctx),
                      static_cast<double>(out.samples)};
        out.history.push_back(h);
        if (!unexpected(out.model, h, ctx)) {
            ++consecutive;
            if (cfg.stop.max_consecutive_expected > 0 && consecutive >= cfg.stop.max_consecutive_expected) break;
            continue;
        }
        consecutive = 0;
        const int invocation = out.unexpected++;

        const ActionRepair r = repair_action(out.model, out.history, ctx, cfg.repair, rng);
        const RepairResult& used = r.adopted == RepairLabel::ShouldExclude ? r.constraint : r.effect;
        const Formula& before = r.adopted == RepairLabel::ShouldExclude ? out.model.constraint : out.model.effect;
        phi_old = out.model.constraint;
        out.model = r.model;

        InvocationSummary sum;
        sum.trial = trial;
        sum.invocation = invocation;
        sum.initial_error = used.initial_error;
        sum.final_error = used.best_error;
        sum.applied = used.applied;
        sum.evaluated = used.evaluated;
        sum.adopted = r.adopted;
        sum.constraint = print_formula(out.model.constraint);
        sum.param_error = param_error(setup, out.model.constraint);
        sum.best_by_edit.push_back(used.initial_error);
        if (used.initial_error <= kZero) sum.edits_to_zero = 0;

        out.metrics.push_back({trial, invocation, 0, used.initial_error, used.initial_error,
                               timed ? std::optional<double>(0.0) : std::nullopt, print_formula(before),
                               param_error(setup, before)});
        for (const auto& step : used.steps) {
            if (step.applied >= static_cast<int>(sum.best_by_edit.size())) sum.best_by_edit.push_back(step.best_error);
            if (sum.edits_to_zero < 0 && step.best_error <= kZero) sum.edits_to_zero = step.applied;
            std::optional<double> pe;
            if (setup.true_radius) pe = param_error(setup, parse_formula(step.formula, *ctx.registry));
            out.metrics.push_back({trial, invocation, step.applied, step.error, step.best_error,
                                   timed ? std::optional<double>(step.elapsed_s) : std::nullopt, step.formula, pe});
        }
        out.invocations.push_back(std::move(sum));
        if (out.unexpected >= cfg.stop.max_unexpected) break;
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const StateSpace space = StateSpace::desk(cfg.num_objects, cfg.half_extent);
    EvalContext ctx;
    ctx.space = &space;
    ctx.registry = &builtin_registry();
    const ExperimentSetup setup = experiment_setup(cfg.experiment);

    ExperimentResult res;
    res.config = cfg;
    for (int t = 0; t < cfg.trials; ++t) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(t));
        // Objects placed uniformly once per trial and left there.
        const State world = sample_state(space, rng);
        res.trials.push_back(run_repair_loop(setup, cfg, ctx, world, t, rng));
    }
    res.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!cfg.out.empty()) write_outputs(res, cfg.out);
    return res;
}

namespace {

std::string num(double v)
{
    return format_significant(v, 9);
}

std::string num(const std::optional<double>& v)
{
    return v ? num(*v) : std::string();
}

std::string quoted(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

void write_metrics_csv(std::ostream& out, const ExperimentResult& r)
{
    out << "trial,invocation,edit_index,error,best_error,elapsed_s,formula,param_error\n";
    for (const auto& t : r.trials)
        for (const auto& m : t.metrics)
            out << m.trial << ',' << m.invocation << ',' << m.edit_index << ',' << num(m.error) << ','
                << num(m.best_error) << ',' << num(m.elapsed_s) << ',' << quoted(m.formula) << ','
                << num(m.param_error) << '\n';
}

double quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) return std::nan("");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void write_boxplot(std::ostream& out, const ExperimentResult& r)
{
    std::size_t width = 0;
    for (const auto& t : r.trials)
        for (const auto& inv : t.invocations) width = std::max(width, inv.best_by_edit.size());
    out << "edit_index,count,min,q1,median,q3,max,mean,outliers\n";
    for (std::size_t k = 0; k < width; ++k) {
        // Invocations that stopped earlier keep their final value.
        std::vector<double> v;
        for (const auto& t : r.trials)
            for (const auto& inv : t.invocations)
                if (!inv.best_by_edit.empty()) v.push_back(inv.best_by_edit[std::min(k, inv.best_by_edit.size() - 1)]);
        std::sort(v.begin(), v.end());
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        const double q1 = quantile(v, 0.25), q3 = quantile(v, 0.75);
        const double fence = 1.5 * (q3 - q1);
        std::string outliers;
        for (double x : v)
            if (x < q1 - fence || x > q3 + fence) outliers += (outliers.empty() ? "" : ";") + num(x);
        out << k << ',' << v.size() << ',' << num(v.front()) << ',' << num(q1) << ',' << num(quantile(v, 0.5)) << ','
            << num(q3) << ',' << num(v.back()) << ',' << num(mean) << ',' << outliers << '\n';
    }
}

void write_invocations_csv(std::ostream& out, const ExperimentResult& r)
{
    out << "trial,invocation,initial_error,final_error,applied,evaluated,edits_to_zero,adopted,constraint,"
           "param_error\n";
    for (const auto& t : r.trials)
        for (const auto& inv : t.invocations)
            out << inv.trial << ',' << inv.invocation << ',' << num(inv.initial_error) << ',' << num(inv.final_error)
                << ',' << inv.applied << ',' << inv.evaluated << ',' << inv.edits_to_zero << ','
                << label_name(inv.adopted) << ',' << quoted(inv.constraint) << ',' << num(inv.param_error) << '\n';
}

void write_outputs(const ExperimentResult& r, const std::string& out)
{
    auto open = [](const std::string& path) {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write '" + path + "'");
        return f;
    };
    auto metrics = open(out);
    write_metrics_csv(metrics, r);
    auto box = open(out + ".boxplot.csv");
    write_boxplot(box, r);
    auto inv = open(out + ".invocations.csv");
    write_invocations_csv(inv, r);
}

}  // namespace cpzrepair
