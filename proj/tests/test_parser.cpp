#include "test_support.hpp"

#include "densalg/parser.hpp"

#include <doctest.h>

using namespace densalg;
using namespace densalg::test;

TEST_CASE("expression grammar basics") {
    ChartPtr c = chart_super12();
    ScalarExpr x = ScalarExpr::coordinate(c, 0);
    ScalarExpr xi = ScalarExpr::coordinate(c, 1);
    ScalarExpr eta = ScalarExpr::coordinate(c, 2);
    ScalarExpr one = ScalarExpr::constant(c, Rational(1));
    CHECK(equals(parse_expression("3/4", c), ScalarExpr::constant(c, Rational(3, 4))));
    CHECK(equals(parse_expression("x^2 - 2*x + 1", c), x * x - Rational(2) * x + one));
    CHECK(equals(parse_expression("-x^2", c), -(x * x)));
    CHECK(equals(parse_expression("xi*eta - eta*xi", c), Rational(2) * (xi * eta)));
    CHECK(equals(parse_expression("1/(x+1)", c), inverse(x + one)));
    CHECK(equals(parse_expression("(x+1)^-2", c), power(x + one, -2)));
    CHECK(equals(parse_expression("  2 * x ^ 3\n - x ", c),
                 Rational(2) * power(x, 3) - x));
    // division by a soul-invertible expression
    CHECK(equals(parse_expression("1/(x + xi*eta)", c), inverse(x + xi * eta)));
}

TEST_CASE("syntax errors carry positions") {
    ChartPtr c = chart_even1();
    CHECK_THROWS_WITH_AS(parse_expression("x+*y", c),
                         doctest::Contains("col 3"), error);
    CHECK_THROWS_WITH_AS(parse_expression("x + y", c),
                         doctest::Contains("undeclared coordinate 'y'"), error);
    CHECK_THROWS_AS(parse_expression("x +", c), error);
    CHECK_THROWS_AS(parse_expression("x) ", c), error);
    CHECK_THROWS_AS(parse_expression("1/0", c), error);
    CHECK_THROWS_AS(parse_expression("x^x", c), error);
}

TEST_CASE("print then parse is the identity") {
    Rng rng(227);
    for (ChartPtr c : {chart_even1(), chart_super11(), chart_super12(), chart_even2()}) {
        for (int it = 0; it < 25; ++it) {
            ScalarExpr e = rng.scalar(c, 3);
            if (rng.intval(0, 1)) e = e + rng.scalar(c, 2).soul();
            ScalarExpr back = parse_expression(e.str(), c);
            CHECK(equals(back, e));
            // and printing is stable under the round trip
            CHECK(parse_expression(back.str(), c).str() == back.str());
        }
        // rational functions round-trip too
        ScalarExpr x = ScalarExpr::coordinate(c, 0);
        ScalarExpr r = divide(x + ScalarExpr::constant(c, Rational(2)),
                              x * x + ScalarExpr::constant(c, Rational(1)));
        CHECK(equals(parse_expression(r.str(), c), r));
    }
}
