// Command-line entry point: run experiments, repair a model from a log,
// sample states from a formula, check a log against a model.
//
// Exit codes: 0 ok, 1 usage, 2 invalid input, 3 runtime failure.

#include "cpzrepair/counterexample_sampling.hpp"
#include "cpzrepair/experiment_io.hpp"
#include "cpzrepair/harness.hpp"
#include "cpzrepair/model_io.hpp"
#include "cpzrepair/text_util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace cpzrepair;

namespace {

constexpr int kOk = 0, kUsage = 1, kInvalid = 2, kRuntime = 3;

struct InvalidInput : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

struct Common
{
    std::optional<std::uint64_t> seed;
    std::optional<double> budget_s;
    std::optional<int> budget_edits;
    std::optional<int> trials;
    std::optional<double> p_naive;
    std::string out;
};

void add_common(CLI::App* app, Common& c, bool experiment_flags)
{
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--budget-s", c.budget_s, "wall-clock budget per repair invocation (s, 0 disables)");
    app->add_option("--budget-edits", c.budget_edits, "evaluated-edit budget per repair invocation (-1 disables)");
    if (experiment_flags) {
        app->add_option("--trials", c.trials, "number of trials")->check(CLI::PositiveNumber);
        app->add_option("--p-naive", c.p_naive, "probability of a naive sample")->check(CLI::Range(0.0, 1.0));
    }
    app->add_option("--out", c.out, "output path");
}

RepairOptions repair_options(const Common& c)
{
    RepairOptions o;
    if (c.budget_s) o.budget_s = *c.budget_s;
    if (c.budget_edits) o.budget_edits = *c.budget_edits;
    if (o.budget_s <= 0.0 && o.budget_edits < 0) throw InvalidInput("need --budget-s > 0 or --budget-edits >= 0");
    return o;
}

struct World
{
    StateSpace space = StateSpace::desk();
    EvalContext ctx;
    World()
    {
        ctx.space = &space;
        ctx.registry = &builtin_registry();
    }
};

ActionModel load_model(const World& w, const std::string& path)
{
    ActionModel m = parse_model(read_file(path), *w.ctx.registry, &w.space);
    EvalContext c = w.ctx;
    for (const auto& p : m.params)
        if (p.kind == ParamKind::ObjectRef) c.theta[p.name] = w.space.objects().front().name;
    validate_model(m, c);
    return m;
}

std::vector<Observation> load_log(const World& w, const ActionModel& m, const std::string& path)
{
    std::istringstream in(read_file(path));
    auto obs = read_observation_log(w.space, in);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& h = obs[i];
        const std::string where = "observation " + std::to_string(i + 1) + ": ";
        if (h.action != m.name) throw InvalidInput(where + "action '" + h.action + "' is not '" + m.name + "'");
        if (!w.space.valid(h.q) || !w.space.valid(h.q_next)) throw InvalidInput(where + "state out of bounds");
        for (const auto& p : m.params) {
            if (p.kind != ParamKind::ObjectRef) continue;
            auto it = h.theta.find(p.name);
            if (it == h.theta.end() || w.space.object_index(it->second) < 0)
                throw InvalidInput(where + "parameter '" + p.name + "' is not bound to an object");
        }
    }
    return obs;
}

int cmd_run(const std::string& config_path, const std::string& experiment, const Common& c)
{
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = parse_experiment_config(read_file(config_path));
        if (!experiment.empty() && experiment_from_name(experiment) != cfg.experiment)
            throw InvalidInput("--experiment disagrees with the config file");
    } else {
        cfg = default_config(experiment_from_name(experiment.empty() ? "param" : experiment));
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.budget_s) cfg.repair.budget_s = *c.budget_s;
    if (c.budget_edits) cfg.repair.budget_edits = *c.budget_edits;
    if (c.trials) cfg.trials = *c.trials;
    if (c.p_naive) cfg.sampler.p_naive = *c.p_naive;
    if (!c.out.empty()) cfg.out = c.out;
    cfg.validate();

    const ExperimentResult r = run_experiment(cfg);
    if (cfg.out.empty()) write_metrics_csv(std::cout, r);
    int invocations = 0, zero = 0;
    for (const auto& t : r.trials)
        for (const auto& inv : t.invocations) {
            ++invocations;
            zero += inv.edits_to_zero >= 0;
        }
    std::cerr << experiment_name(cfg.experiment) << ": " << cfg.trials << " trials, " << invocations
              << " repair invocations, " << zero << " reached zero error, " << format_significant(r.elapsed_s, 4)
              << " s\n";
    return kOk;
}

int cmd_repair(const std::string& model_path, const std::string& log_path, const Common& c)
{
    World w;
    const ActionModel m = load_model(w, model_path);
    const auto obs = load_log(w, m, log_path);
    const RepairOptions opts = repair_options(c);
    int unexpected_count = 0;
    for (const auto& h : obs) unexpected_count += unexpected(m, h, w.ctx);
    if (unexpected_count == 0) {
        std::cerr << "0 unexpected; model unchanged\n";
        emit(c.out, print_model(m));
        return kOk;
    }
    Rng rng(c.seed.value_or(1));
    const ActionRepair r = repair_action(m, obs, w.ctx, opts, rng);
    const RepairResult& used = r.adopted == RepairLabel::ShouldExclude ? r.constraint : r.effect;
    std::cerr << unexpected_count << " unexpected; repaired " << (r.adopted == RepairLabel::ShouldExclude ? "constraint" : "effect")
              << ", error " << format_significant(used.initial_error, 9) << " -> "
              << format_significant(used.best_error, 9) << " (" << used.evaluated << " edits evaluated)\n";
    emit(c.out, print_model(r.model));
    return kOk;
}

int cmd_sample(const std::string& formula_text, int count, const std::string& obj, const Common& c)
{
    World w;
    const Formula f = parse_formula(formula_text, *w.ctx.registry, &w.space);
    std::vector<ParamSpec> params{{"obj", ParamKind::ObjectRef}};
    EvalContext probe = w.ctx;
    probe.theta["obj"] = w.space.objects().front().name;
    validate_formula(f, probe);
    if (!obj.empty() && w.space.object_index(obj) < 0) throw InvalidInput("unknown object '" + obj + "'");
    Rng rng(c.seed.value_or(1));
    std::string text;
    for (int i = 0; i < count; ++i) {
        Sample s = naive_sample(f, w.ctx, params, rng);
        if (!obj.empty()) {
            // Re-draw until θ picks the requested object.
            while (s.theta.at("obj") != obj) s = naive_sample(f, w.ctx, params, rng);
        }
        nlohmann::ordered_json j;
        j["theta"] = s.theta;
        j["state"] = nlohmann::ordered_json::parse(state_to_json(w.space, s.state));
        j["fallback"] = s.fallback;
        text += j.dump() + "\n";
    }
    emit(c.out, text);
    return kOk;
}

int cmd_check(const std::string& model_path, const std::string& log_path, const Common& c)
{
    World w;
    const ActionModel m = load_model(w, model_path);
    const auto obs = load_log(w, m, log_path);
    std::string report;
    int n = 0;
    for (std::size_t i = 0; i < obs.size(); ++i)
        if (unexpected(m, obs[i], w.ctx)) {
            ++n;
            report += "unexpected " + std::to_string(i + 1) + "\n";
        }
    report = std::to_string(obs.size()) + " observations, " + std::to_string(n) + " unexpected\n" + report;
    emit(c.out, report);
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Action-model repair over constrained polynomial zonotopes"};
    app.require_subcommand(1);

    Common run_c, repair_c, sample_c, check_c;
    std::string config_path, experiment;
    auto* run = app.add_subcommand("run", "run an experiment");
    run->add_option("config", config_path, "experiment config file (key = value)");
    run->add_option("--experiment", experiment, "param, missing or multiple");
    add_common(run, run_c, true);

    std::string model_path, log_path;
    auto* rep = app.add_subcommand("repair", "repair a model from an observation log");
    rep->add_option("model", model_path, "action model file")->required();
    rep->add_option("log", log_path, "observation log (one JSON record per line)")->required();
    add_common(rep, repair_c, false);

    std::string formula_text, obj;
    int count = 10;
    auto* smp = app.add_subcommand("sample", "sample states from a formula");
    smp->add_option("formula", formula_text, "formula text")->required();
    smp->add_option("--count", count, "number of samples")->check(CLI::NonNegativeNumber);
    smp->add_option("--obj", obj, "bind obj to this object");
    add_common(smp, sample_c, false);

    std::string check_model, check_log;
    auto* chk = app.add_subcommand("check", "classify an observation log against a model");
    chk->add_option("model", check_model, "action model file")->required();
    chk->add_option("log", check_log, "observation log")->required();
    add_common(chk, check_c, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*run) return cmd_run(config_path, experiment, run_c);
        if (*rep) return cmd_repair(model_path, log_path, repair_c);
        if (*smp) return cmd_sample(formula_text, count, obj, sample_c);
        if (*chk) return cmd_check(check_model, check_log, check_c);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
