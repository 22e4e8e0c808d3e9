#include "cpzrepair/model_io.hpp"

#include <doctest.h>

#include <sstream>

using namespace cpzrepair;

TEST_CASE("action model round trip")
{
    const StateSpace space = StateSpace::desk();
    const std::string text =
        "(action pick (params (obj object)) (constraint (or (and (dist obj manip 0.1) (roll obj manip 0.25)) "
        "(empty manip))) (effect (not (empty manip))))";
    const ActionModel m = parse_model(text, builtin_registry(), &space);
    CHECK(m.name == "pick");
    REQUIRE(m.params.size() == 1);
    CHECK(m.params[0].kind == ParamKind::ObjectRef);
    CHECK(m.constraint.disjuncts.size() == 2);
    CHECK(print_formula(m.effect) == "(symbol manip-empty false)");
    CHECK(m.object_params() == std::vector<std::string>{"obj"});

    const ActionModel back = parse_model(print_model(m), builtin_registry(), &space);
    CHECK(back.name == m.name);
    CHECK(back.constraint == m.constraint);
    CHECK(back.effect == m.effect);
    CHECK(print_model(back) == print_model(m));

    EvalContext ctx{&space, &builtin_registry(), {{"obj", "block0"}}, {}};
    CHECK_NOTHROW(validate_model(m, ctx));
}

TEST_CASE("malformed models are rejected")
{
    CHECK_THROWS_AS(parse_model("(action pick (constraint (dist obj manip 0.1)))"), ModelFormatError);
    CHECK_THROWS_AS(parse_model("(actn pick)"), ModelFormatError);
    CHECK_THROWS_AS(parse_model("(action pick (params (obj thing)) (constraint (empty manip)) (effect (empty manip)))"),
                    ModelFormatError);
    CHECK_THROWS_AS(parse_model("(action pick (constraint (empty manip)) (effect (empty manip))"), ModelFormatError);
    CHECK_THROWS_AS(parse_model("(action pick (constraint (dist obj manip)) (effect (empty manip)))"),
                    FormulaSyntaxError);
    CHECK_THROWS_AS(parse_model("(action pick (constraint (empty manip)) (effect (empty manip))) x"),
                    ModelFormatError);
}

TEST_CASE("observation log round trip")
{
    const StateSpace space = StateSpace::desk();
    Rng rng(4);
    std::vector<Observation> obs;
    for (int i = 0; i < 5; ++i) {
        Observation h{"pick", sample_state(space, rng), {{"obj", i % 2 ? "block1" : "block0"}},
                      sample_state(space, rng), 0.5 * i};
        obs.push_back(h);
    }
    std::stringstream ss;
    write_observation_log(space, ss, obs);
    ss << "\n";
    const auto back = read_observation_log(space, ss);
    REQUIRE(back.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        CHECK(back[i].action == "pick");
        CHECK(back[i].theta == obs[i].theta);
        CHECK(back[i].timestamp == obs[i].timestamp);
        CHECK(back[i].q.robot == obs[i].q.robot);  // exact: shortest round-trip text
        CHECK(back[i].q_next.objects[1] == obs[i].q_next.objects[1]);
        CHECK(back[i].q.symbols == obs[i].q.symbols);
    }

    std::stringstream bad("{\"action\": \"pick\"}\n");
    CHECK_THROWS_WITH_AS(read_observation_log(space, bad), doctest::Contains("line 1"), std::invalid_argument);
}
