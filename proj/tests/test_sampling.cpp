#include "cpzrepair/counterexample_sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>

using namespace cpzrepair;

namespace {

struct World
{
    StateSpace space = StateSpace::desk();
    EvalContext ctx;
    State world;
    std::vector<ParamSpec> params{{"obj", ParamKind::ObjectRef}};
    World()
    {
        ctx.space = &space;
        ctx.registry = &builtin_registry();
        Rng rng(11);
        world = sample_state(space, rng);
        world.objects[0] << 0.1, -0.2, 0.3, 1.0;
        world.objects[1] << -0.4, 0.4, -0.3, -2.0;
    }
    Formula parse(const std::string& t) const { return parse_formula(t, *ctx.registry, &space); }
    double dist(const Sample& s) const
    {
        const int o = space.object_index(s.theta.at("obj"));
        return (s.state.robot.head(3) - s.state.objects[o].head(3)).norm();
    }
};

}  // namespace

TEST_CASE("sample_theta binds object parameters uniformly")
{
    World w;
    Rng rng(1);
    int first = 0;
    for (int i = 0; i < 4000; ++i) first += sample_theta(w.params, w.space, rng).at("obj") == "block0";
    CHECK(first == doctest::Approx(2000).epsilon(0.06));
}

TEST_CASE("naive samples of a ball lie in the ball")
{
    World w;
    Rng rng(2);
    const Formula f = w.parse("(dist obj manip 0.1)");
    int fallbacks = 0;
    for (int i = 0; i < 1000; ++i) {
        const Sample s = naive_sample(f, w.ctx, w.params, rng, &w.world);
        CHECK(w.space.valid(s.state));
        fallbacks += s.fallback;
        if (!s.fallback) CHECK(w.dist(s) <= 0.1 + 1e-6);
        CHECK(s.state.objects == w.world.objects);
    }
    CHECK(fallbacks == 0);
}

TEST_CASE("naive samples of (empty manip) have an empty gripper")
{
    World w;
    Rng rng(3);
    const Formula f = w.parse("(empty manip)");
    for (int i = 0; i < 200; ++i) CHECK(naive_sample(f, w.ctx, w.params, rng).state.symbols[0] == 1);
}

TEST_CASE("unconstrained dims are filled uniformly")
{
    World w;
    Rng rng(5);
    const Formula f = w.parse("(dist obj manip 0.3)");
    double lo = 10, hi = -10;
    for (int i = 0; i < 10000; ++i) {
        const Sample s = naive_sample(f, w.ctx, w.params, rng);
        lo = std::min(lo, s.state.objects[1][3]);
        hi = std::max(hi, s.state.objects[1][3]);
    }
    CHECK((hi - lo) / (2 * std::numbers::pi) >= 0.99);
}

TEST_CASE("difference samples land in the annulus")
{
    World w;
    Rng rng(6);
    ActiveSampler sampler({0.0, 100, 0});
    const Formula big = w.parse("(dist obj manip 0.5)"), small = w.parse("(dist obj manip 0.1)");
    int diff = 0;
    for (int i = 0; i < 400; ++i) {
        const Sample s = sampler.next(big, small, w.ctx, w.params, rng, &w.world);
        if (s.naive) {
            CHECK(w.dist(s) <= 0.1 + 1e-6);  // fallback to the new formula
            continue;
        }
        ++diff;
        CHECK(w.dist(s) > 0.1);
        CHECK(w.dist(s) <= 0.5 + 1e-6);
    }
    // Only the old-not-new direction is non-empty here.
    CHECK(diff == 200);
}

TEST_CASE("identical formulas give naive samples only")
{
    World w;
    Rng rng(7);
    ActiveSampler sampler({0.0, 5, 0});
    const Formula f = w.parse("(dist obj manip 0.2)");
    for (int i = 0; i < 50; ++i) {
        const Sample s = sampler.next(f, f, w.ctx, w.params, rng, &w.world);
        CHECK(s.naive);
        CHECK(w.dist(s) <= 0.2 + 1e-6);
    }
}

TEST_CASE("naive frequency follows p_naive")
{
    World w;
    Rng rng(8);
    ActiveSampler sampler({0.3, 100, 0});
    const Formula a = w.parse("(dist obj manip 0.5)"), b = w.parse("(roll obj manip 0.5)");
    int naive = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) naive += sampler.next(a, b, w.ctx, w.params, rng, &w.world).naive;
    CHECK(static_cast<double>(naive) / n == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("config validation")
{
    CHECK_THROWS(SamplerConfig{1.5, 100, 0}.validate());
    CHECK_THROWS(SamplerConfig{0.1, 0, 0}.validate());
    CHECK_NOTHROW(SamplerConfig{}.validate());
}
