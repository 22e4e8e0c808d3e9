#include "cpzrepair/predicates.hpp"

#include <doctest.h>

#include <numbers>

using namespace cpzrepair;

namespace {

struct World
{
    StateSpace space = StateSpace::desk();
    EvalContext ctx;
    State s;
    World()
    {
        ctx.space = &space;
        ctx.registry = &builtin_registry();
        ctx.theta = {{"obj", "block0"}};
        s.robot = Vector::Zero(4);
        s.objects = {Vector::Zero(4), Vector::Zero(4)};
        s.objects[0] << 0.2, -0.1, 0.3, 0.5;
        s.objects[1] << -0.5, 0.5, 0.0, 0.0;
        s.symbols = {1};
        place_gripper(0, 0, 0);
    }
    void place_gripper(double dx, double dy, double dz)
    {
        s.robot.head(3) = s.objects[0].head(3) + Vector3d(dx, dy, dz);
    }
    using Vector3d = Eigen::Vector3d;
};

}  // namespace

TEST_CASE("builtin templates")
{
    const auto all = builtin_templates();
    REQUIRE(all.size() == 4);
    CHECK(all[0]->name() == "empty");
    CHECK(all[1]->name() == "dist");
    CHECK(all[2]->name() == "roll");
    CHECK(all[3]->name() == "symbol");

    World w;
    const Atom dist{"dist", {Arg::ref("obj"), Arg::ref("manip"), Arg::number(0.1)}};
    const Cpz ball = builtin_registry().at("dist").region(dist, w.ctx, w.s);
    Matrix A(1, 4);
    A << 1, 1, 1, -0.5;
    ExponentMatrix R = ExponentMatrix::Zero(4, 4);
    R(0, 0) = R(1, 1) = R(2, 2) = 2;
    R(3, 3) = 1;
    CHECK(ball.generators() == 0.1 * Matrix::Identity(3, 3));
    CHECK(ball.constraint_generators() == A);
    CHECK(ball.constraint_values()[0] == 0.5);
    CHECK(ball.constraint_exponents() == R);
    CHECK(ball.center() == w.s.objects[0].head(3));
    CHECK(ball.dims() == std::vector<DimId>{"manip.x", "manip.y", "manip.z"});

    const Atom empty{"empty", {Arg::ref("manip")}};
    const Cpz e = builtin_registry().at("empty").region(empty, w.ctx, w.s);
    CHECK(e.num_factors() == 0);
    CHECK(contains(e, Vector::Constant(1, 1.0)));
    CHECK_FALSE(contains(e, Vector::Constant(1, 0.0)));
    CHECK_FALSE(contains(e, Vector::Constant(1, 0.6)));
}

TEST_CASE("roll atom is an interval on the wrapped difference")
{
    World w;
    const Atom roll{"roll", {Arg::ref("obj"), Arg::ref("manip"), Arg::number(0.1)}};
    const auto& t = builtin_registry().at("roll");
    const Cpz r = t.region(roll, w.ctx, w.s);
    CHECK(contains(r, Vector::Constant(1, 0.05)));
    CHECK_FALSE(contains(r, Vector::Constant(1, 0.2)));

    w.s.robot[3] = w.s.objects[0][3] + 0.05;
    CHECK(eval_atom(roll, w.s, w.ctx));
    w.s.robot[3] = w.s.objects[0][3] - 0.2;
    CHECK_FALSE(eval_atom(roll, w.s, w.ctx));
    // Wrapping across the seam.
    w.s.objects[0][3] = std::numbers::pi - 0.02;
    w.s.robot[3] = -std::numbers::pi + 0.03;
    CHECK(eval_atom(roll, w.s, w.ctx));
}

TEST_CASE("eval_atom and eval_formula")
{
    World w;
    const Formula f = parse_formula("(dist obj manip 0.1)");
    CHECK(eval_formula(f, w.s, w.ctx));
    w.place_gripper(0.3, 0, 0);
    CHECK_FALSE(eval_formula(f, w.s, w.ctx));
    w.place_gripper(0.06, 0.05, -0.05);  // norm 0.0933
    CHECK(eval_formula(f, w.s, w.ctx));
    w.place_gripper(0.06, 0.06, -0.06);  // norm 0.1039
    CHECK_FALSE(eval_formula(f, w.s, w.ctx));

    w.place_gripper(0, 0, 0);
    const Formula both = parse_formula("(and (dist obj manip 0.1) (empty manip))");
    CHECK(eval_formula(both, w.s, w.ctx));
    w.s.symbols[0] = 0;
    CHECK_FALSE(eval_formula(both, w.s, w.ctx));
    CHECK_FALSE(eval_atom(Atom{"empty", {Arg::ref("manip")}}, w.s, w.ctx));

    const Formula either = parse_formula("(or (empty manip) (dist obj manip 0.1))");
    CHECK(eval_formula(either, w.s, w.ctx));

    w.ctx.theta = {{"obj", "nothing"}};
    CHECK_THROWS_AS(eval_formula(f, w.s, w.ctx), std::invalid_argument);
}

TEST_CASE("formula_region agrees with pointwise evaluation")
{
    World w;
    const Formula single = parse_formula("(dist obj manip 0.1)");
    auto cover = formula_region(single, w.s, w.ctx);
    REQUIRE(cover.size() == 1);
    CHECK(cover[0] == distance_cpz(w.s.objects[0].head(3), 0.1, {"manip.x", "manip.y", "manip.z"}));

    const Formula both = parse_formula("(and (dist obj manip 0.1) (empty manip))");
    cover = formula_region(both, w.s, w.ctx);
    REQUIRE(cover.size() == 1);
    CHECK(cover[0].dimension() == 4);

    CHECK(formula_region(parse_formula("(or (empty manip) (dist obj manip 0.1))"), w.s, w.ctx).size() == 2);

    const Formula three = parse_formula("(and (dist obj manip 0.3) (roll obj manip 0.5) (empty manip))");
    const Cpz region = formula_region(three, w.s, w.ctx)[0];
    Rng rng(2);
    int agree = 0, total = 0, inside = 0;
    for (int i = 0; i < 1000; ++i) {
        State q = sample_state(w.space, rng);
        q.objects = w.s.objects;
        // Concentrate probes near the object so both outcomes occur.
        std::normal_distribution<double> nd(0.0, 0.2);
        for (int k = 0; k < 3; ++k) q.robot[k] = w.s.objects[0][k] + nd(rng);
        const bool pointwise = eval_formula(three, q, w.ctx);
        const bool in_region = contains(region, point_in(region, transformed_values(three, q, w.ctx)));
        ++total;
        agree += pointwise == in_region;
        inside += pointwise;
    }
    CHECK(agree == total);
    CHECK(inside > 20);
}

TEST_CASE("parse and print")
{
    const Formula a = parse_formula("(dist obj manip 0.5)");
    REQUIRE(a.disjuncts.size() == 1);
    REQUIRE(a.disjuncts[0].size() == 1);
    CHECK(a.disjuncts[0][0].args[2].value == 0.5);

    const Formula b = parse_formula("(and (dist obj manip 0.1) (roll obj manip 0.1))");
    CHECK(b.disjuncts.size() == 1);
    CHECK(b.disjuncts[0].size() == 2);

    const Formula c = parse_formula("(or (and (empty manip)) (dist obj manip 0.1))");
    CHECK(c.disjuncts.size() == 2);
    CHECK(print_formula(c) == "(or (empty manip) (dist obj manip 0.1))");

    for (const char* text : {"(dist obj manip 0.1)", "(and (dist obj manip 0.30000000000000004) (empty manip))",
                             "(or (and (roll obj manip 1e-05) (symbol manip-empty false)) (empty manip))"}) {
        const Formula f = parse_formula(text);
        CHECK(print_formula(f) == text);
        CHECK(parse_formula(print_formula(f)) == f);
    }

    CHECK(parse_formula("(not (empty manip))") == parse_formula("(symbol manip-empty false)"));
    CHECK(parse_formula("(not (symbol manip-empty false))") == parse_formula("(symbol manip-empty true)"));
    CHECK_THROWS_AS(parse_formula("(not (dist obj manip 0.1))"), FormulaSyntaxError);
    CHECK_THROWS_AS(parse_formula("(and (or (empty manip)))"), FormulaSyntaxError);
    CHECK_THROWS_AS(parse_formula("(or (or (empty manip)))"), FormulaSyntaxError);
    CHECK_THROWS_AS(parse_formula("(dist obj manip x)"), FormulaSyntaxError);
    CHECK_THROWS_AS(parse_formula("(dist obj manip 0.1"), FormulaSyntaxError);
    CHECK_THROWS_AS(parse_formula("(bogus)"), FormulaSyntaxError);
    try {
        parse_formula("(and (empty manip) (dist obj 0.1))");
        FAIL("expected a syntax error");
    } catch (const FormulaSyntaxError& e) {
        CHECK(e.position() == 19);
    }
}

TEST_CASE("validation")
{
    World w;
    CHECK_NOTHROW(validate_formula(parse_formula("(and (dist obj manip 0.1) (empty manip))"), w.ctx));
    CHECK_THROWS(validate_formula(parse_formula("(and (dist obj manip 0.1) (dist obj manip 0.2))"), w.ctx));
    CHECK_THROWS(validate_formula(parse_formula("(dist obj manip 9)"), w.ctx));
    CHECK_THROWS(validate_formula(parse_formula("(symbol manip-empty maybe)"), w.ctx));
    CHECK_NOTHROW(validate_formula(parse_formula("(and (dist block0 manip 0.1) (dist block1 manip 0.1))"), w.ctx));
}
