#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace symrank;

namespace {

Expression x(Index k) { return Expression::variable(k); }

// Random expression over d variables built from the commutative and
// non-commutative built-ins.
Expression random_expr(std::mt19937_64& rng, std::size_t d, int depth) {
  if (depth == 0 || rng() % 3 == 0) return x(rng() % d);
  static const char* unary[] = {"id", "cube", "square", "sin", "cos", "abs", "neg"};
  static const char* binary[] = {"+", "-", "*"};
  if (rng() % 2) return Expression::unary(unary[rng() % 7], random_expr(rng, d, depth - 1));
  return Expression::binary(binary[rng() % 3], random_expr(rng, d, depth - 1), random_expr(rng, d, depth - 1));
}

}  // namespace

TEST(Expression, VariableNamesAreOneBased) {
  EXPECT_EQ(x(0).canonical(), "x1");
  EXPECT_EQ(x(2).canonical(), "x3");
  EXPECT_EQ(x(2).variables(), (std::set<Index>{2}));
}

TEST(Expression, CommutativeOperandsAreOrdered) {
  EXPECT_EQ(Expression::binary("+", x(0), x(1)), Expression::binary("+", x(1), x(0)));
  EXPECT_EQ(Expression::binary("*", x(2), x(0)).canonical(), "(x1*x3)");
  EXPECT_NE(Expression::binary("-", x(0), x(1)), Expression::binary("-", x(1), x(0)));
  EXPECT_NE(Expression::binary("/", x(0), x(1)), Expression::binary("/", x(1), x(0)));
}

TEST(Expression, IdentityCollapses) {
  EXPECT_EQ(Expression::unary("id", x(0)), x(0));
  EXPECT_EQ(Expression::unary("cube", Expression::binary("+", x(0), x(0))).canonical(), "cube(x1+x1)");
}

TEST(Expression, NoAlgebraicSimplification) {
  const auto doubled = Expression::binary("+", x(0), x(0));
  EXPECT_EQ(doubled.canonical(), "(x1+x1)");
  EXPECT_NE(doubled, Expression::binary("*", Expression::constant(2.0), x(0)));
}

TEST(Expression, CanonicalizationIsIdempotent) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto e = random_expr(rng, 3, 4);
    EXPECT_EQ(e.canonicalized().canonical(), e.canonical());
    EXPECT_EQ(e.canonicalized().canonicalized().canonical(), e.canonical());
  }
}

TEST(Expression, SameCanonicalFormEvaluatesIdentically) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::map<std::string, Expression> first;
  int collisions = 0;
  for (int i = 0; i < 4000; ++i) {
    const auto e = random_expr(rng, 3, 3);
    auto [it, inserted] = first.emplace(e.canonical(), e);
    if (inserted) continue;
    ++collisions;
    for (int k = 0; k < 20; ++k) {
      const double row[3] = {u(rng), u(rng), u(rng)};
      const double a = e.evaluate(row), b = it->second.evaluate(row);
      ASSERT_TRUE(a == b || (std::isnan(a) && std::isnan(b))) << e.canonical();
    }
  }
  EXPECT_GT(collisions, 100);
}

TEST(Expression, Evaluation) {
  const double row[3] = {2.0, 5.0, 3.0};
  EXPECT_DOUBLE_EQ(Expression::binary("+", x(0), x(2)).evaluate(row), 5.0);
  EXPECT_DOUBLE_EQ(Expression::unary("cube", x(0)).evaluate(row), 8.0);
  EXPECT_DOUBLE_EQ(Expression::binary("/", x(1), x(0)).evaluate(row), 2.5);
  EXPECT_THROW(x(5).evaluate(row), Error);
}

TEST(Expression, PartialFlag) {
  EXPECT_TRUE(Expression::binary("/", x(0), x(1)).may_be_partial());
  EXPECT_TRUE(Expression::unary("log", x(0)).may_be_partial());
  EXPECT_FALSE(Expression::binary("*", x(0), x(1)).may_be_partial());
}

TEST(Expression, UnknownOperator) {
  try {
    Expression::unary("tanh", x(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownOperator);
  }
}

TEST(ExpressionParser, ParsesPolynomialsAndFunctions) {
  const auto q = parse_expression("-4*x^2+4*x");
  EXPECT_NEAR(q(0.5), 1.0, 1e-15);
  EXPECT_NEAR(q(0.25), 0.75, 1e-15);
  const auto s = parse_expression("sin(4*x+0.2)");
  EXPECT_NEAR(s(0.3), std::sin(1.4), 1e-15);
  EXPECT_EQ(parse_expression("x1+x3"), Expression::binary("+", x(0), x(2)));
  EXPECT_EQ(parse_expression("x3 + x1"), parse_expression("x1+x3"));
  EXPECT_EQ(parse_expression("(x1+x1)^3"), Expression::unary("cube", Expression::binary("+", x(0), x(0))));
  EXPECT_EQ(parse_expression("x^1"), x(0));
}

TEST(ExpressionParser, RoundTripsCanonicalText) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 300; ++i) {
    const auto e = random_expr(rng, 3, 3);
    EXPECT_EQ(parse_expression(e.canonical()).canonical(), e.canonical());
  }
}

TEST(ExpressionParser, ColumnNames) {
  const auto e = parse_expression("alpha*beta", {"alpha", "beta"});
  EXPECT_EQ(e, Expression::binary("*", x(0), x(1)));
}

TEST(ExpressionParser, RejectsMalformedInput) {
  for (const char* bad : {"", "x+", "sin(x", "foo(x)", "x1 x2", "3*"}) {
    try {
      parse_expression(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_TRUE(e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::UnknownOperator) << bad;
    }
  }
}
