#include <cmath>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "tfe/expression.hpp"

using namespace tfe;
using test_util::kPi;

namespace {
double ev(const std::string& text, double x = 0.0, double y = 0.0) {
  return Expression(text).eval(x, y);
}
}  // namespace

TEST_CASE("arithmetic precedence and associativity") {
  CHECK(ev("1+2*3") == 7.0);
  CHECK(ev("(1+2)*3") == 9.0);
  CHECK(ev("2-3-4") == -5.0);
  CHECK(ev("12/4/3") == 1.0);
  CHECK(ev("2+10/5") == 4.0);
  // Exponentiation is right associative and binds tighter than unary minus.
  CHECK(ev("2^3^2") == 512.0);
  CHECK(ev("-2^2") == -4.0);
  CHECK(ev("(-2)^2") == 4.0);
  CHECK(ev("2^-1") == 0.5);
  CHECK(ev("--3") == 3.0);
}

TEST_CASE("functions, constants, and variables") {
  CHECK(ev("pi") == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(ev("sin(pi/2)") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ev("cos(0)") == 1.0);
  CHECK(ev("exp(1)") == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(ev("sin(cos(0)*pi/2)") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ev("x*y + x^2", 2.0, 3.0) == 10.0);
  CHECK(ev("y", 5.0, -7.5) == -7.5);
  CHECK(ev("0.25e1 + 1e-1") == doctest::Approx(2.6).epsilon(1e-15));
  CHECK(ev(" 1 + 2 ") == 3.0);
}

TEST_CASE("syntax errors carry a character position") {
  CHECK_THROWS_AS(Expression("1+"), ExpressionError);
  CHECK_THROWS_AS(Expression("(1+2"), ExpressionError);
  CHECK_THROWS_AS(Expression("1+$2"), ExpressionError);
  CHECK_THROWS_AS(Expression("sin"), ExpressionError);
  CHECK_THROWS_AS(Expression("sin 3"), ExpressionError);
  CHECK_THROWS_AS(Expression("1 2"), ExpressionError);
  CHECK_THROWS_AS(Expression(""), ExpressionError);
  CHECK_THROWS_AS(Expression("z+1"), ExpressionError);

  try {
    Expression("12+*3");
    FAIL("expected a parse error");
  } catch (const ExpressionError& e) {
    // The bad token is the '*' at offset 3; the message repeats it.
    CHECK(e.position() == 3);
    CHECK(std::string(e.what()).find("position 3") != std::string::npos);
  }
}

TEST_CASE("the adapter matches direct evaluation") {
  const Expression e("sin(2*pi*x)*cos(2*pi*y)");
  const auto fn = e.fn();
  for (double x : {0.0, 0.25, 0.7})
    for (double y : {0.1, 0.5})
      CHECK(fn(x, y) == e.eval(x, y));

  // Copies evaluate identically.
  const Expression copy = e;
  CHECK(copy.eval(0.3, 0.4) == e.eval(0.3, 0.4));
  CHECK(copy.text() == e.text());
}
