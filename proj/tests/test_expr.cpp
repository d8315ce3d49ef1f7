#include <doctest.h>

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/expr.hpp"

using namespace fragcoag;

TEST_CASE("literals and arithmetic") {
    CHECK(Expr::parse("2", 0).eval_m(0.0) == 2.0);
    CHECK(Expr::parse("1.5e2", 0).eval_m(0.0) == 150.0);
    CHECK(Expr::parse(".25", 0).eval_m(0.0) == 0.25);
    CHECK(Expr::parse("1+2*3", 0).eval_m(0.0) == 7.0);          // precedence
    CHECK(Expr::parse("(1+2)*3", 0).eval_m(0.0) == 9.0);        // grouping
    CHECK(Expr::parse("2-3-4", 0).eval_m(0.0) == -5.0);         // left assoc
    CHECK(Expr::parse("24/4/2", 0).eval_m(0.0) == 3.0);
    CHECK(Expr::parse("-2*-3", 0).eval_m(0.0) == 6.0);          // unary minus
    CHECK(Expr::parse("--2", 0).eval_m(0.0) == 2.0);
    CHECK(Expr::parse(" 1 + 2 ", 0).eval_m(0.0) == 3.0);        // whitespace
    CHECK(Expr::parse("1 - -0.5", 0).eval_m(0.0) == 1.5);
}

TEST_CASE("variables honor the allowed mask") {
    const Expr f = Expr::parse("i*j + m - b", Expr::VarI | Expr::VarJ | Expr::VarM | Expr::VarB);
    CHECK(f.eval(2.0, 3.0, 5.0, 1.0) == 10.0);
    CHECK((f.vars_used() & Expr::VarI) != 0);
    CHECK((f.vars_used() & Expr::VarB) != 0);

    const Expr g = Expr::parse("m*(2-m)", Expr::VarM);
    CHECK(g.eval_m(0.5) == doctest::Approx(0.75));
    CHECK(g.vars_used() == Expr::VarM);

    CHECK_THROWS_AS(Expr::parse("i+1", Expr::VarM), ConfigError);   // i not allowed
    CHECK_THROWS_AS(Expr::parse("b", Expr::VarI | Expr::VarJ), ConfigError);
    CHECK_THROWS_AS(Expr::parse("x+1", ~0u), ConfigError);          // unknown name
}

TEST_CASE("syntax errors raise ConfigError") {
    CHECK_THROWS_AS(Expr::parse("", 0), ConfigError);
    CHECK_THROWS_AS(Expr::parse("1+", 0), ConfigError);
    CHECK_THROWS_AS(Expr::parse("(1+2", 0), ConfigError);
    CHECK_THROWS_AS(Expr::parse("1+2)", 0), ConfigError);
    CHECK_THROWS_AS(Expr::parse("1 2", 0), ConfigError);
    CHECK_THROWS_AS(Expr::parse("*3", 0), ConfigError);
    CHECK_THROWS_AS(Expr::parse("2^3", 0), ConfigError);  // no power operator
    CHECK_THROWS_AS(Expr::parse("1..5", 0), ConfigError);
}

TEST_CASE("division by zero evaluates to an infinity, not a crash") {
    const Expr f = Expr::parse("1/m", Expr::VarM);
    CHECK(std::isinf(f.eval_m(0.0)));
    CHECK(f.eval_m(2.0) == 0.5);
}

TEST_CASE("source text and emptiness are preserved") {
    const Expr f = Expr::parse("1+m", Expr::VarM);
    CHECK(f.source() == "1+m");
    CHECK(!f.empty());
    CHECK(Expr().empty());
}

TEST_CASE("kernel- and reward-shaped expressions") {
    // the symmetric kernel family used in configs: rates depend on i, j, m
    const Expr fc = Expr::parse("1/(1+m)", Expr::VarI | Expr::VarJ | Expr::VarM);
    CHECK(fc.eval(1.0, 2.0, 1.0, 0.0) == 0.5);
    // terminal reward shape: concave with peak at m* = 1
    const Expr v0 = Expr::parse("-(m-1)*(m-1)", Expr::VarM);
    CHECK(v0.eval_m(1.0) == 0.0);
    CHECK(v0.eval_m(0.0) == -1.0);
    CHECK(v0.eval_m(2.5) == doctest::Approx(-2.25));
}
