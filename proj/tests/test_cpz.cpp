#include "cpz_fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace cpzrepair;
using fixtures::ball;
using fixtures::example_se;
using fixtures::interval;
using fixtures::vec;

TEST_CASE("evaluate_point expands each monomial")
{
    const Cpz se = example_se();
    // (1,0) + (2,0) a1 + (1,0) a2^2 + (2,3) a1 a2 at a = (1,1)
    CHECK(evaluate_point(se, vec({1, 1})).isApprox(vec({6, 3})));
    CHECK(evaluate_point(se, vec({0, 0})).isApprox(se.center()));
    CHECK(evaluate_point(se, vec({-1, 0.5})).isApprox(vec({1 - 2 + 0.25 - 1, -1.5})));

    const Cpz b = ball(vec({0, 0, 0}), 0.1);
    CHECK(evaluate_point(b, vec({0, 0, 0, -1})).isZero());
    CHECK_THROWS_AS(evaluate_point(b, vec({0, 0})), DimensionError);
}

TEST_CASE("constraint_residual")
{
    const Cpz se = example_se();
    // Rows: a1 + 3 a1^2 a2^2 - 2, a2 + 5 a1^2 a2^2 - 1, 7 a1^2 a2^2 - 2
    const double a1 = 8.0 / 7.0, a2 = -3.0 / 7.0;
    const double m = a1 * a1 * a2 * a2;
    const double expected = std::max({std::abs(a1 + 3 * m - 2), std::abs(a2 + 5 * m - 1), std::abs(7 * m - 2)});
    CHECK(constraint_residual(se, vec({a1, a2})) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(770.0 / 2401.0));
    CHECK(constraint_residual(se, vec({a1, a2})) > 0.0);

    CHECK(constraint_residual(ball(vec({0, 0, 0}), 0.1), vec({1, 0, 0, 1})) == doctest::Approx(0.0));
    CHECK(constraint_residual(interval(-1, 1, "x"), vec({0.3})) == 0.0);
}

TEST_CASE("constructor validation")
{
    CHECK_THROWS_AS(Cpz(vec({0}), Matrix::Zero(1, 2), ExponentMatrix::Zero(1, 1), Matrix(0, 0), Vector(0),
                        ExponentMatrix(1, 0), {"x"}),
                    DimensionError);
    CHECK_THROWS_AS(Cpz::point(vec({0, 1}), {"x", "x"}), DimensionError);
    CHECK_THROWS_AS(Cpz::point(vec({0, 1}), {"x"}), DimensionError);
    ExponentMatrix neg(1, 1);
    neg << -1;
    CHECK_THROWS(Cpz::zonotope(vec({0}), Matrix::Ones(1, 1), neg, {"x"}));
}

TEST_CASE("contains on the distance template")
{
    const Cpz b = ball(vec({0, 0, 0}), 0.1);
    CHECK(contains(b, vec({0, 0, 0})));
    CHECK(contains(b, vec({0.05, 0, 0})));
    CHECK(contains(b, vec({0.0, 0.06, -0.07})));
    CHECK_FALSE(contains(b, vec({0.2, 0, 0})));
    CHECK_FALSE(contains(b, vec({0.06, 0.06, 0.06})));  // norm 0.1039
}

TEST_CASE("two-factor constrained set is empty")
{
    const Cpz se = example_se();
    // Grid oracle: residual never gets near zero over the factor box.
    double best = 1e9;
    for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j)
            best = std::min(best, constraint_residual(se, vec({-1 + i * 0.01, -1 + j * 0.01})));
    CHECK(best > 0.01);
    CHECK(is_empty(se));
    CHECK_FALSE(contains(se, vec({1, 0})));
    Rng rng(3);
    CHECK_FALSE(sample_point(se, rng).has_value());
}

TEST_CASE("contains with a constraint row on a factor no dim uses")
{
    // x = a1 over [-1, 1]; a2 appears only in the row a2^2 = b.
    auto make = [](double rhs) {
        Matrix G(1, 1);
        G << 1;
        ExponentMatrix E(2, 1);
        E << 1, 0;
        Matrix A(1, 1);
        A << 1;
        Vector b(1);
        b << rhs;
        ExponentMatrix R(2, 1);
        R << 0, 2;
        return Cpz(vec({0}), G, E, A, b, R, {"x"});
    };
    const Cpz ok = make(0.25);
    CHECK(contains(ok, vec({0.5})));
    CHECK_FALSE(contains(ok, vec({1.5})));
    CHECK_FALSE(is_empty(ok));

    const Cpz none = make(2.0);  // a2^2 <= 1 can never reach 2
    CHECK_FALSE(contains(none, vec({0.5})));
    CHECK(is_empty(none));
}

TEST_CASE("intersect and unite on disjoint balls")
{
    const Cpz b0 = ball(vec({0, 0, 0}), 0.1);
    const Cpz b1 = ball(vec({0.3, 0, 0}), 0.1);
    const Cpz both = intersect(b0, b1);
    CHECK(both.num_factors() == 8);
    CHECK(both.num_constraints() == 2 + 3);
    CHECK(is_empty(both));
    CHECK_FALSE(contains(both, vec({0.15, 0, 0})));

    const Cpz either = unite(b0, b1);
    CHECK(contains(either, vec({0.3, 0, 0})));
    CHECK(contains(either, vec({0.0, 0.05, 0})));
    CHECK(contains(either, vec({0.38, 0, 0})));
    CHECK_FALSE(contains(either, vec({0.15, 0, 0})));

    const Cpz same = intersect(b0, b0);
    CHECK(contains(same, vec({0.05, 0.05, 0})));
    CHECK_FALSE(contains(same, vec({0.1, 0.1, 0})));

    CHECK_THROWS_AS(intersect(b0, ball(vec({0, 0, 0}), 0.1, {"x", "y", "w"})), DimensionError);
}

TEST_CASE("project")
{
    const Cpz b = ball(vec({0.2, 0, 0}), 0.1);
    CHECK(project(b, b.dims()) == b);
    const Cpz px = project(b, {"x"});
    CHECK(contains(px, vec({0.2})));
    CHECK(contains(px, vec({0.1 + 1e-9})));
    CHECK(contains(px, vec({0.3 - 1e-9})));
    CHECK_FALSE(contains(px, vec({0.3 + 1e-3})));
    CHECK_FALSE(contains(px, vec({0.1 - 1e-3})));
    CHECK_THROWS_AS(project(b, {"q"}), DimensionError);
}

TEST_CASE("unify one-dimensional intervals")
{
    BoundsMap bounds{{"x", {"x", -2, 2}}, {"y", {"y", -2, 2}}};
    auto [s1, s2] = unify(interval(-1, 1, "x"), interval(-1, 1, "y"), bounds);
    CHECK(s1.dims() == std::vector<DimId>{"x", "y"});
    CHECK(s2.dims() == std::vector<DimId>{"x", "y"});
    // Spanning generator first, original factor first in the exponents.
    Matrix G1(2, 2);
    G1 << 0, 1, 2, 0;
    ExponentMatrix E1(2, 2);
    E1 << 0, 1, 1, 0;
    CHECK(s1.generators() == G1);
    CHECK(s1.exponents() == E1);
    CHECK(contains(s1, vec({0, 1.9})));
    CHECK_FALSE(contains(s1, vec({1.5, 0})));
    CHECK(contains(s2, vec({1.9, 0})));
    CHECK_FALSE(contains(s2, vec({0, 1.5})));

    const Cpz b = ball(vec({0, 0, 0}), 0.1);
    auto [u1, u2] = unify(b, b, {{"x", {"x", -1, 1}}, {"y", {"y", -1, 1}}, {"z", {"z", -1, 1}}});
    CHECK(u1 == b);
    CHECK(u2 == b);
    CHECK_THROWS_AS(unify(interval(-1, 1, "x"), interval(-1, 1, "q"), bounds), DimensionError);
}

TEST_CASE("distance_to_set matches the exterior ball distance")
{
    const Cpz b = ball(vec({0, 0, 0}), 0.1);
    CHECK(distance_to_set(b, vec({0.2, 0, 0})).squared == doctest::Approx(0.01).epsilon(1e-4));
    const double r = std::sqrt(0.08) - 0.1;
    CHECK(distance_to_set(b, vec({0.2, 0.2, 0})).squared == doctest::Approx(r * r).epsilon(1e-4));
    CHECK(distance_to_set(b, vec({0.1, 0, 0})).squared < 1e-10);
    CHECK(distance_to_set(b, vec({0.03, 0, 0})).squared < 1e-10);
}

TEST_CASE("boundary_depth")
{
    const Cpz b = ball(vec({0, 0, 0}), 0.1);
    const auto at_center = boundary_depth(b, vec({0, 0, 0}));
    CHECK(at_center.squared > 0.0);
    CHECK(at_center.squared <= 0.01 + 1e-9);
    CHECK(boundary_depth(b, vec({0.09, 0, 0})).squared == doctest::Approx(1e-4).epsilon(0.1));
    CHECK(boundary_depth(Cpz::point(vec({1, 2}), {"x", "y"}), vec({1, 2})).squared == 0.0);

    DepthOptions q;
    q.quantized_dims = {"s"};
    const Cpz sym = Cpz::point(vec({1}), {"s"});
    CHECK(boundary_depth(sym, vec({1}), q).squared == doctest::Approx(0.25));
}

TEST_CASE("sample_point soundness")
{
    Rng rng(11);
    const Cpz b = ball(vec({0.3, -0.2, 0.1}), 0.1);
    for (int i = 0; i < 200; ++i) {
        auto p = sample_point(b, rng);
        REQUIRE(p.has_value());
        CHECK((*p - b.center()).norm() <= 0.1 + 1e-5);
    }
    const Cpz z = interval(-1, 1, "x");
    for (int i = 0; i < 100; ++i) {
        auto p = sample_point(z, rng, 1);
        REQUIRE(p.has_value());
        CHECK(std::abs((*p)[0]) <= 1.0);
    }
}

TEST_CASE("interval hull")
{
    auto [lo, hi] = interval_hull(example_se());
    // x: 1 + [-2,2] + [0,1] + [-2,2], y: [-3,3]
    CHECK(lo.isApprox(vec({-3, -3})));
    CHECK(hi.isApprox(vec({6, 3})));
}

TEST_CASE("text round trip")
{
    const Cpz se = example_se();
    CHECK(cpz_from_text(to_text(se)) == se);
    const Cpz b = ball(vec({0.1234567890123, -1.0 / 3.0, 2e-17}), 0.1);
    CHECK(cpz_from_text(to_text(b)) == b);
    const Cpz pt = Cpz::point(vec({1}), {"manip-empty"});
    CHECK(cpz_from_text(to_text(pt)) == pt);
    CHECK_THROWS(cpz_from_text("cpz dims 1 x c 1 1 zz"));
}
