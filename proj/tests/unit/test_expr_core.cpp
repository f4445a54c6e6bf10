#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "chronexp/expr.hpp"
#include "chronexp/parser.hpp"
#include "generators.hpp"

using namespace chronexp;

namespace {

Expr P(const char* text) { return parse_expression(text, gen::names()); }
Symbol S(const char* name) { return gen::symbol_named(name); }

constexpr int kCases = 300;

}  // namespace

TEST(Rational, CanonicalRepresentation) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> num(-1000, 1000), den(1, 1000);
  for (int i = 0; i < kCases; ++i) {
    long p = num(rng), q = den(rng) * (i % 2 ? -1 : 1);
    Rational r(p, q);
    EXPECT_GT(r.denominator(), 0);
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.numerator().get_mpz_t(), r.denominator().get_mpz_t());
    EXPECT_EQ(g, 1);
    EXPECT_DOUBLE_EQ(r.to_double(), static_cast<double>(p) / static_cast<double>(q));
  }
  EXPECT_EQ(Rational(0, 7).str(), "0");
  EXPECT_EQ(Rational(0, 7).denominator(), 1);
  EXPECT_EQ(Rational(6, -4).str(), "-3/2");
  EXPECT_EQ(Rational::parse("12.375").str(), "99/8");
  EXPECT_THROW(Rational(1, 0), Error);
  EXPECT_THROW(Rational(1) / Rational(0), Error);
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize(Expr::add({sym(S("x")), Expr(0L)})), sym(S("x")));
  Expr c = sym(S("c"));
  EXPECT_EQ(normalize(Expr::mul({Expr(2L), Expr::add({c, c})})), Expr(4L) * c);
  Expr cx = sym(S("c_x"));
  Expr merged = normalize(Expr::add({Expr::mul({c, cx}), Expr::mul({cx, c})}));
  // term-multiset oracle: one term, factors {2, c, c_x}
  ASSERT_EQ(merged.kind(), ExprKind::Mul);
  ASSERT_EQ(merged.args().size(), 3u);
  EXPECT_EQ(merged.args()[0], Expr(2L));
  EXPECT_EQ(merged.args()[1], c);
  EXPECT_EQ(merged.args()[2], cx);
}

TEST(Normalize, StructuralInvariants) {
  gen::ExprGen g(11);
  std::function<void(const Expr&)> check = [&](const Expr& e) {
    switch (e.kind()) {
      case ExprKind::Add:
      case ExprKind::Mul: {
        ASSERT_GE(e.args().size(), 2u);
        for (std::size_t i = 0; i < e.args().size(); ++i) {
          const Expr& a = e.args()[i];
          EXPECT_NE(a.kind(), e.kind());
          if (e.kind() == ExprKind::Add) EXPECT_FALSE(a.is_zero());
          if (e.kind() == ExprKind::Mul) EXPECT_FALSE(a.is_one());
          check(a);
        }
        break;
      }
      case ExprKind::Pow:
        EXPECT_NE(e.exponent(), 0);
        EXPECT_NE(e.exponent(), 1);
        check(e.base());
        break;
      case ExprKind::Func:
        check(e.arg());
        break;
      default:
        break;
    }
  };
  for (int i = 0; i < kCases; ++i) check(normalize(g()));
}

TEST(Normalize, Idempotent) {
  gen::ExprGen g(1);
  for (int i = 0; i < kCases; ++i) {
    Expr once = normalize(g());
    EXPECT_EQ(normalize(once), once) << render(once, gen::names());
  }
}

TEST(Normalize, PolynomialIdentitiesCollapse) {
  EXPECT_TRUE((pow(P("x + 1"), 2) - P("x^2 + 2*x + 1")).is_zero());
  EXPECT_TRUE((P("(c - c_x)*(c + c_x)") - P("c^2 - c_x^2")).is_zero());
  EXPECT_EQ(P("x/x"), Expr(1L));
  EXPECT_EQ(P("x^2/x^3"), pow(sym(S("x")), -1));
}

TEST(Diff, Examples) {
  EXPECT_EQ(diff(P("c^2"), S("c")), P("2*c"));
  EXPECT_EQ(diff(P("s*c"), S("s")), P("c"));
  EXPECT_EQ(diff(P("c*c_x"), S("c_x")), P("c"));
  EXPECT_EQ(diff(P("c*c_x"), S("c_xx")), Expr(0L));
  EXPECT_EQ(diff(P("sin(x^2)"), S("x")), P("2*x*cos(x^2)"));
  EXPECT_EQ(diff(P("ln(x)"), S("x")), P("1/x"));
}

TEST(Diff, JetCoordinatesAgainstFiniteDifferences) {
  // d(c*c_x)/d c_x = c, checked numerically
  Expr e = P("c*c_x");
  Bindings b{{S("c"), 1.3}, {S("c_x"), -0.4}};
  const double h = 1e-5;
  Bindings up = b, down = b;
  up[S("c_x")] += h;
  down[S("c_x")] -= h;
  double fd = (eval_num(e, up) - eval_num(e, down)) / (2 * h);
  EXPECT_NEAR(fd, eval_num(diff(e, S("c_x")), b), 1e-8);
}

TEST(Diff, LinearityAndLeibniz) {
  gen::ExprGen g(2);
  for (int i = 0; i < kCases; ++i) {
    Expr e = normalize(g(2)), f = normalize(g(2));
    Symbol s = g.any_symbol();
    EXPECT_EQ(diff(e + f, s), diff(e, s) + diff(f, s));
    EXPECT_EQ(diff(e * f, s), diff(e, s) * f + e * diff(f, s))
        << render(e, gen::names()) << " | " << render(f, gen::names());
  }
}

TEST(Diff, MatchesCentralDifferences) {
  gen::ExprGen g(3, gen::default_pool(), false);
  const double h = 1e-5;
  for (int i = 0; i < kCases; ++i) {
    Expr e = normalize(g());
    Symbol s = g.any_symbol();
    Bindings b = gen::random_bindings(g.rng());
    Bindings up = b, down = b;
    up[s] += h;
    down[s] -= h;
    double fd = (eval_num(e, up) - eval_num(e, down)) / (2 * h);
    double exact = eval_num(diff(e, s), b);
    EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact))) << render(e, gen::names());
  }
}

TEST(Subst, Examples) {
  EXPECT_EQ(subst(P("s^2*c"), S("s"), sym(S("a"))), P("a^2*c"));
  EXPECT_EQ(subst(P("c - s*c^2"), S("s"), Expr(0L)), P("c"));
  Expr folded = subst(P("exp(s)"), S("s"), Expr(0L));
  EXPECT_EQ(folded, Expr(1L));
  EXPECT_EQ(eval_num(folded, {}), std::exp(0.0));
}

TEST(Subst, IsSimultaneous) {
  Substitution swap{{S("x"), sym(S("c"))}, {S("c"), sym(S("x"))}};
  EXPECT_EQ(subst(P("x - 2*c"), swap), P("c - 2*x"));
}

TEST(Subst, ThenEvalEqualsExtendedBindings) {
  gen::ExprGen g(4);
  for (int i = 0; i < kCases; ++i) {
    Expr e = normalize(g());
    Expr value = normalize(g(1));
    Symbol s = g.any_symbol();
    Bindings b = gen::random_bindings(g.rng());
    double v = eval_num(value, b);
    if (!std::isfinite(v) || std::abs(v) < 0.1) continue;  // keep 1/s away from a pole
    Bindings extended = b;
    extended[s] = v;
    double lhs = eval_num(subst(e, s, value), b);
    double rhs = eval_num(e, extended);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs))) << render(e, gen::names());
  }
}

TEST(EvalNum, Examples) {
  EXPECT_EQ(eval_num(P("c^2"), {{S("c"), 3.0}}), 9.0);
  EXPECT_EQ(eval_num(P("sin(t)"), {{S("t"), 0.0}}), 0.0);
  Bindings b{{S("c"), 1.0}, {S("c_x"), 2.0}, {S("c_xx"), -1.0}};
  EXPECT_EQ(eval_num(P("2*c*c_x^2 + c^2*c_xx"), b), 7.0);
}

TEST(EvalNum, Errors) {
  try {
    eval_num(P("c + x"), {{S("c"), 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnboundSymbol);
  }
  try {
    eval_num(P("ln(x)"), {{S("x"), -1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
  try {
    eval_num(P("1/x"), {{S("x"), 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
  EXPECT_THROW(P("1/(x - x)"), Error);
}

TEST(Polynomial, CoefficientsAndDetection) {
  auto coeffs = polynomial_coefficients(P("3*t^2*c - t + c_x"), S("t"));
  ASSERT_TRUE(coeffs);
  ASSERT_EQ(coeffs->size(), 3u);
  EXPECT_EQ((*coeffs)[0], P("c_x"));
  EXPECT_EQ((*coeffs)[1], Expr(-1L));
  EXPECT_EQ((*coeffs)[2], P("3*c"));
  EXPECT_FALSE(is_polynomial_in(P("sin(t)*c"), S("t")));
  EXPECT_FALSE(is_polynomial_in(P("c/t"), S("t")));
  EXPECT_TRUE(is_polynomial_in(P("sin(x)*t"), S("t")));
}

TEST(FunctionRegistry, CustomRuleIsUsable) {
  if (!FunctionRegistry::contains("sinh"))
    FunctionRegistry::add("sinh", {[](double v) { return std::sinh(v); },
                                   [](const Expr& arg) { return call("cosh", arg); }, nullptr});
  if (!FunctionRegistry::contains("cosh"))
    FunctionRegistry::add("cosh", {[](double v) { return std::cosh(v); },
                                   [](const Expr& arg) { return call("sinh", arg); }, nullptr});
  Expr e = P("sinh(2*x)");
  EXPECT_EQ(diff(e, S("x")), P("2*cosh(2*x)"));
  EXPECT_NEAR(eval_num(e, {{S("x"), 0.5}}), std::sinh(1.0), 1e-15);
}

TEST(Concurrency, SharedExpressionsAcrossThreads) {
  gen::ExprGen g(5);
  std::vector<Expr> exprs;
  for (int i = 0; i < 40; ++i) exprs.push_back(normalize(g()));
  std::vector<std::vector<Expr>> results(4);
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < results.size(); ++k)
    pool.emplace_back([&, k] {
      for (const auto& e : exprs) results[k].push_back(diff(e * e, S("c")));
    });
  for (auto& t : pool) t.join();
  for (std::size_t k = 1; k < results.size(); ++k)
    for (std::size_t i = 0; i < exprs.size(); ++i) EXPECT_EQ(results[k][i], results[0][i]);
}
