#include "cpzrepair/experiment_io.hpp"
#include "cpzrepair/harness.hpp"

#include <doctest.h>

#include <sstream>

using namespace cpzrepair;

namespace {

struct Desk
{
    StateSpace space = StateSpace::desk();
    EvalContext ctx;
    Desk()
    {
        ctx.space = &space;
        ctx.registry = &builtin_registry();
    }
};

ExperimentConfig small(ExperimentId id, int trials)
{
    ExperimentConfig cfg = default_config(id);
    cfg.trials = trials;
    cfg.repair.budget_s = 0.0;
    cfg.repair.budget_edits = 40;
    cfg.seed = 3;
    return cfg;
}

std::string csv(const ExperimentResult& r)
{
    std::ostringstream o;
    write_metrics_csv(o, r);
    return o.str();
}

}  // namespace

TEST_CASE("pick controller applies the effect only where the truth holds")
{
    Desk w;
    const auto ctrl = pick_controller(parse_formula("(dist obj manip 0.1)", *w.ctx.registry));
    Rng rng(5);
    State q = sample_state(w.space, rng);
    q.symbols[0] = w.space.symbols()[0].code("true");
    const ParamBinding theta{{"obj", "block1"}};
    const int obj = 1;

    for (int i = 0; i < 3; ++i) q.robot[i] = q.objects[obj][i] + (i == 0 ? 0.05 : 0.0);
    const State moved = execute_controller(ctrl, q, theta, w.ctx);
    for (const char* axis : {"x", "y", "z", "roll"})
        CHECK(moved.objects[obj][w.space.object_dim_index(obj, axis)] ==
              q.robot[w.space.robot_dim_index(axis)]);
    CHECK(moved.objects[0] == q.objects[0]);
    CHECK(moved.symbols[0] == w.space.symbols()[0].code("false"));

    q.robot[0] = q.objects[obj][0] + 0.3;
    const State stuck = execute_controller(ctrl, q, theta, w.ctx);
    CHECK(stuck.robot == q.robot);
    CHECK(stuck.objects[obj] == q.objects[obj]);
    CHECK(stuck.symbols == q.symbols);

    CHECK_THROWS_AS(execute_controller(ctrl, q, {{"obj", "nope"}}, w.ctx), std::invalid_argument);
}

TEST_CASE("experiment names and defaults")
{
    for (auto id : {ExperimentId::Param, ExperimentId::Missing, ExperimentId::Multiple})
        CHECK(experiment_from_name(experiment_name(id)) == id);
    CHECK_THROWS_AS(experiment_from_name("other"), std::invalid_argument);

    const auto p = default_config(ExperimentId::Param);
    CHECK(p.trials == 10);
    CHECK(p.stop.max_unexpected == 5);
    CHECK(p.repair.budget_s == 20.0);
    const auto m = default_config(ExperimentId::Missing);
    CHECK(m.trials == 20);
    CHECK(m.stop.max_unexpected == 10);
    const auto x = default_config(ExperimentId::Multiple);
    CHECK(x.stop.max_unexpected == 100);
    CHECK(x.stop.max_consecutive_expected == 1000);
    CHECK_FALSE(experiment_setup(ExperimentId::Param).active_sampling);
    CHECK(experiment_setup(ExperimentId::Multiple).active_sampling);
}

TEST_CASE("config validation")
{
    auto cfg = default_config(ExperimentId::Param);
    CHECK_NOTHROW(cfg.validate());
    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = default_config(ExperimentId::Param);
    cfg.repair.budget_s = 0.0;
    cfg.repair.budget_edits = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = default_config(ExperimentId::Param);
    cfg.stop.max_consecutive_expected = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("quantile interpolates linearly")
{
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({7.0}, 0.3) == 7.0);
}

TEST_CASE("stop rules")
{
    Desk w;
    auto setup = experiment_setup(ExperimentId::Param);
    // Model equal to the truth: nothing is ever unexpected.
    setup.initial.constraint = setup.controller.truth;
    auto cfg = small(ExperimentId::Param, 1);
    Rng rng(11);
    const State world = sample_state(w.space, rng);

    cfg.stop.max_consecutive_expected = 25;
    auto r = run_repair_loop(setup, cfg, w.ctx, world, 0, rng);
    CHECK(r.samples == 25);
    CHECK(r.unexpected == 0);
    CHECK(r.metrics.empty());

    cfg.stop.max_consecutive_expected = -1;
    cfg.stop.max_samples = 40;
    r = run_repair_loop(setup, cfg, w.ctx, world, 0, rng);
    CHECK(r.samples == 40);
    CHECK(r.history.size() == 40);
}

TEST_CASE("repair loop on the wrong-radius experiment")
{
    const auto cfg = small(ExperimentId::Param, 2);
    const auto res = run_experiment(cfg);
    REQUIRE(res.trials.size() == 2);
    for (const auto& t : res.trials) {
        CHECK(t.unexpected == cfg.stop.max_unexpected);
        CHECK(static_cast<int>(t.invocations.size()) == t.unexpected);
        // Objects never move between samples.
        for (const auto& h : t.history) CHECK(h.q.objects == t.world.objects);
        for (const auto& inv : t.invocations) {
            CHECK(inv.final_error <= inv.initial_error);
            CHECK(inv.param_error.has_value());
            for (std::size_t k = 1; k < inv.best_by_edit.size(); ++k)
                CHECK(inv.best_by_edit[k] < inv.best_by_edit[k - 1]);
        }
    }
    // Within an invocation best_error never rises and edit_index never drops.
    for (std::size_t i = 1; i < res.trials[0].metrics.size(); ++i) {
        const auto& a = res.trials[0].metrics[i - 1];
        const auto& b = res.trials[0].metrics[i];
        if (a.invocation != b.invocation) {
            CHECK(b.edit_index == 0);
            continue;
        }
        CHECK(b.best_error <= a.best_error);
        CHECK(b.edit_index >= a.edit_index);
        CHECK_FALSE(b.elapsed_s.has_value());
    }
}

TEST_CASE("edit-budget runs are reproducible")
{
    const auto cfg = small(ExperimentId::Missing, 1);
    const std::string a = csv(run_experiment(cfg));
    const std::string b = csv(run_experiment(cfg));
    CHECK(a == b);
    CHECK(a.rfind("trial,invocation,edit_index,error,best_error,elapsed_s,formula,param_error\n", 0) == 0);
}

TEST_CASE("boxplot rows carry the best error forward")
{
    ExperimentResult r;
    r.config = default_config(ExperimentId::Param);
    TrialResult t;
    InvocationSummary a, b;
    a.best_by_edit = {4.0, 1.0};
    b.best_by_edit = {2.0};
    t.invocations = {a, b};
    r.trials = {t};
    std::ostringstream o;
    write_boxplot(o, r);
    std::istringstream in(o.str());
    std::string header, row0, row1, extra;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK_FALSE(std::getline(in, extra));
    CHECK(row0.rfind("0,2,2,", 0) == 0);  // edit 0: {4, 2}
    CHECK(row1.rfind("1,2,1,", 0) == 0);  // edit 1: {1, 2}
}

TEST_CASE("experiment config text round trip")
{
    auto cfg = default_config(ExperimentId::Multiple);
    cfg.trials = 3;
    cfg.seed = 99;
    cfg.repair.budget_s = 0.0;
    cfg.repair.budget_edits = 12;
    cfg.sampler.p_naive = 0.25;
    cfg.out = "/tmp/x.csv";
    const auto back = parse_experiment_config(print_experiment_config(cfg));
    CHECK(print_experiment_config(back) == print_experiment_config(cfg));

    const auto d = parse_experiment_config("# only the experiment\nexperiment = missing\n");
    CHECK(d.trials == 20);
    CHECK(d.sampler.p_naive == 0.1);

    auto fails_on_line = [](const std::string& text, const std::string& prefix) {
        try {
            parse_experiment_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what()).rfind(prefix, 0) == 0;
        }
        return false;
    };
    CHECK(fails_on_line("trials = 3\ntrials = 4\n", "line 2"));
    CHECK(fails_on_line("trials = 3\nbogus = 1\n", "line 2"));
    CHECK(fails_on_line("\n\ntrials = x\n", "line 3"));
    CHECK(fails_on_line("trials\n", "line 1"));
    CHECK_THROWS_AS(parse_experiment_config("trials = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("experiment = nope\n"), ConfigError);
}
