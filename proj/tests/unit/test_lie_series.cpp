#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chronexp/lie_series.hpp"
#include "chronexp/numeric_ref.hpp"
#include "generators.hpp"

using namespace chronexp;

namespace {

ProblemSpec problem(const std::string& rhs, const std::string& kind = "ode", const std::string& initial = "0") {
  std::string doc = R"({"kind":")" + kind + R"(","time":{"name":"t","initial":")" + initial + R"("},)";
  if (kind == "pde") doc += R"("space":["x"],)";
  doc += R"("fields":["u"],"rhs":{"u":")" + rhs + R"("}})";
  return parse_problem(doc);
}

/// Parses in the data names of `p` (c, c_x, s, a, ...).
Expr D(const ProblemSpec& p, const char* text) {
  NameTable n = p.data_names();
  n.aux = "s";
  if (n.initial_time.empty()) n.initial_time = "a";
  return parse_expression(text, n);
}

int max_jet_order(const Expr& e) {
  int m = 0;
  for (const auto& s : free_symbols(e))
    if (s.is(SymbolClass::Jet)) m = std::max(m, s.jet_order());
  return m;
}

/// Random polynomial in the jets c, c_x, c_xx, the aux symbol and x.
class JetGen {
 public:
  explicit JetGen(std::uint64_t seed, const ProblemSpec& p) : rng_(seed) {
    atoms_ = {sym(p.data_symbol(0)), sym(Symbol::aux())};
    if (p.kind == ProblemKind::Pde) {
      atoms_.push_back(sym(p.data_symbol(0).shifted(0)));
      atoms_.push_back(sym(p.data_symbol(0).shifted(0).shifted(0)));
      atoms_.push_back(sym(Symbol::space(0)));
    }
  }

  Expr operator()() {
    std::uniform_int_distribution<int> terms(1, 3), deg(0, 2), coef(-3, 3);
    std::uniform_int_distribution<std::size_t> atom(0, atoms_.size() - 1);
    Expr out(0L);
    for (int t = terms(rng_); t > 0; --t) {
      Expr term(static_cast<long>(coef(rng_)));
      for (int f = deg(rng_) + 1; f > 0; --f) term = term * atoms_[atom(rng_)];
      out = out + term;
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
  std::vector<Expr> atoms_;
};

}  // namespace

TEST(BuildGenerator, SubstitutesTimeByAux) {
  auto ric = problem("u^2");
  EXPECT_EQ(build_generator(ric).substituted_rhs.at(0), D(ric, "c^2"));
  auto lin = problem("t*u");
  EXPECT_EQ(build_generator(lin).substituted_rhs.at(0), D(lin, "s*c"));
  auto burgers = problem("u*u_x", "pde");
  EXPECT_EQ(build_generator(burgers).substituted_rhs.at(0), D(burgers, "c*c_x"));
  for (const auto& entry : catalog())
    for (const auto& f : build_generator(entry.problem).substituted_rhs)
      EXPECT_FALSE(depends_on(f, Symbol::time())) << entry.name;
}

TEST(TotalDerivative, Examples) {
  auto p = problem("u", "pde");
  EXPECT_EQ(total_derivative(D(p, "c"), 0), D(p, "c_x"));
  EXPECT_EQ(total_derivative(D(p, "c*c_x"), 0), D(p, "c_x^2 + c*c_xx"));
  EXPECT_EQ(total_derivative(D(p, "x*c"), 0), D(p, "c + x*c_x"));
  EXPECT_EQ(total_derivative(D(p, "sin(c)"), MultiIndex{2}), D(p, "cos(c)*c_xx - sin(c)*c_x^2"));
}

TEST(TotalDerivative, MatchesFiniteDifferencesOfASmoothFunction) {
  // c(x) = exp(sin x); D_x(c*c_x) evaluated on its jets vs. d/dx of c*c'
  auto p = problem("u", "pde");
  Expr e = D(p, "c*c_x");
  Expr cx = parse_expression("exp(sin(x))", p.data_names());
  auto jets_at = [&](double x) {
    return initial_jet_bindings(p, {cx}, {x}, {p.data_symbol(0).shifted(0), p.data_symbol(0).shifted(0).shifted(0)});
  };
  const double h = 1e-5;
  for (double x : {-1.0, 0.2, 0.9, 2.5}) {
    double fd = (eval_num(e, jets_at(x + h)) - eval_num(e, jets_at(x - h))) / (2 * h);
    EXPECT_NEAR(eval_num(total_derivative(e, 0), jets_at(x)), fd, 1e-7);
  }
}

TEST(ApplyGenerator, Examples) {
  auto ric = problem("u^2");
  auto g = build_generator(ric);
  Expr e = D(ric, "c");
  e = apply_generator(g, e);
  EXPECT_EQ(e, D(ric, "c^2"));
  e = apply_generator(g, e);
  EXPECT_EQ(e, D(ric, "2*c^3"));
  EXPECT_EQ(apply_generator(g, e), D(ric, "6*c^4"));

  auto lin = problem("t*u");
  auto gl = build_generator(lin);
  EXPECT_EQ(apply_generator(gl, D(lin, "c")), D(lin, "s*c"));
  EXPECT_EQ(apply_generator(gl, D(lin, "s*c")), D(lin, "s^2*c - c"));

  auto burgers = problem("u*u_x", "pde");
  auto gb = build_generator(burgers);
  EXPECT_EQ(apply_generator(gb, D(burgers, "c")), D(burgers, "c*c_x"));
  EXPECT_EQ(apply_generator(gb, D(burgers, "c*c_x")), D(burgers, "2*c*c_x^2 + c^2*c_xx"));
}

TEST(ApplyGenerator, DerivationProperty) {
  for (const auto& entry : catalog()) {
    if (entry.problem.field_count() != 1) continue;
    auto g = build_generator(entry.problem);
    JetGen gen(31, entry.problem);
    for (int i = 0; i < 40; ++i) {
      Expr e1 = gen(), e2 = gen();
      EXPECT_EQ(apply_generator(g, e1 * e2), apply_generator(g, e1) * e2 + e1 * apply_generator(g, e2))
          << entry.name;
    }
  }
}

TEST(ApplyGenerator, DerivationPropertyOnSystems) {
  auto p = catalog_entry("lotka_volterra").problem;
  auto g = build_generator(p);
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> coef(-4, 4), deg(0, 3);
  Expr c1 = sym(p.data_symbol(0)), c2 = sym(p.data_symbol(1)), s = sym(Symbol::aux());
  auto draw = [&] { return Expr(static_cast<long>(coef(rng))) * pow(c1, deg(rng)) * pow(c2, deg(rng)) * pow(s, deg(rng)) + Expr(static_cast<long>(coef(rng))); };
  for (int i = 0; i < 50; ++i) {
    Expr e1 = draw(), e2 = draw();
    EXPECT_EQ(apply_generator(g, e1 * e2), apply_generator(g, e1) * e2 + e1 * apply_generator(g, e2));
  }
}

TEST(ApplyGenerator, ProlongationGrowthBound) {
  for (const char* name : {"heat", "burgers", "transport"}) {
    auto entry = catalog_entry(name);
    auto g = build_generator(entry.problem);
    int q = 0;
    for (const auto& f : entry.problem.rhs) q = std::max(q, max_jet_order(f));
    JetGen gen(33, entry.problem);
    for (int i = 0; i < 40; ++i) {
      Expr e = gen();
      EXPECT_LE(max_jet_order(apply_generator(g, e)), max_jet_order(e) + q) << name;
    }
  }
  for (const char* name : {"riccati", "harmonic", "explicit_time"}) {
    auto sol = solve_series(catalog_entry(name).problem, 6);
    for (const auto& column : sol.coeffs)
      for (const auto& c : column) EXPECT_EQ(max_jet_order(c), 0) << name;
  }
}

TEST(ApplyGenerator, AutonomousProblemsIgnoreAuxShift) {
  SeriesOptions without;
  without.include_aux_shift = false;
  for (const auto& entry : catalog()) {
    if (entry.name == "explicit_time") continue;
    auto g = build_generator(entry.problem);
    EXPECT_EQ(lie_coefficients(g, 5).coeffs, lie_coefficients(g, 5, without).coeffs) << entry.name;
  }
  // with explicit time the shift matters
  auto g = build_generator(problem("t*u"));
  EXPECT_NE(lie_coefficients(g, 2).coeffs, lie_coefficients(g, 2, without).coeffs);
}

TEST(LieCoefficients, Examples) {
  auto ric = problem("u^2");
  EXPECT_EQ(solve_series(ric, 3).coeffs[0],
            (std::vector<Expr>{D(ric, "c"), D(ric, "-c^2"), D(ric, "c^3"), D(ric, "-c^4")}));
  auto growth = problem("-u");
  EXPECT_EQ(solve_series(growth, 3).coeffs[0],
            (std::vector<Expr>{D(growth, "c"), D(growth, "c"), D(growth, "c/2"), D(growth, "c/6")}));

  auto osc = catalog_entry("harmonic").problem;
  NameTable n = osc.data_names();
  auto col = solve_series(osc, 3).coeffs[0];
  EXPECT_EQ(col, (std::vector<Expr>{parse_expression("c1", n), parse_expression("c2", n),
                                    parse_expression("-c1/2", n), parse_expression("-c2/6", n)}));

  auto heat = problem("-u_xx", "pde");
  EXPECT_EQ(solve_series(heat, 2).coeffs[0],
            (std::vector<Expr>{D(heat, "c"), D(heat, "c_xx"), D(heat, "c_xxxx/2")}));
}

TEST(LieCoefficients, SymbolicInitialTime) {
  // u' = t u from t = a: u = c exp((t^2 - a^2)/2)
  auto p = problem("-t*u", "ode", "a");
  auto col = solve_series(p, 3).coeffs[0];
  EXPECT_EQ(col[1], D(p, "a*c"));
  EXPECT_EQ(col[2], D(p, "(a^2 + 1)*c/2"));
  EXPECT_EQ(col[3], D(p, "(a^3 + 3*a)*c/6"));
}

TEST(LieCoefficients, SeedAndSymbolInvariants) {
  for (const auto& entry : catalog()) {
    auto sol = solve_series(entry.problem, 4);
    for (std::size_t i = 0; i < sol.coeffs.size(); ++i) {
      EXPECT_EQ(sol.coeffs[i][0], sym(entry.problem.data_symbol(i)));
      for (const auto& c : sol.coeffs[i]) {
        EXPECT_FALSE(depends_on(c, Symbol::time())) << entry.name;
        EXPECT_FALSE(depends_on(c, Symbol::aux())) << entry.name;
      }
    }
  }
}

TEST(LieCoefficients, BudgetStopsBlowup) {
  SeriesOptions tight;
  tight.term_budget = 10;
  try {
    lie_coefficients(build_generator(catalog_entry("burgers").problem), 8, tight);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ExpressionBlowup);
  }
}

TEST(EvalSeries, Examples) {
  auto ric = problem("u^2");
  auto sol = solve_series(ric, 8);
  EXPECT_NEAR(eval_series(sol, 0.1, {{ric.data_symbol(0), 1.0}})[0], 1.0 / 1.1, 1e-8);

  auto heat = problem("-u_xx", "pde");
  auto hs = solve_series(heat, 6);
  Expr sinx = parse_expression("sin(x)", heat.data_names());
  Bindings b = initial_jet_bindings(heat, {sinx}, {0.3}, required_jets(hs));
  EXPECT_NEAR(eval_series(hs, 0.05, b)[0], std::exp(-0.05) * std::sin(0.3), 1e-10);
}

TEST(EvalSeries, ReturnsInitialDataAtInitialTime) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (const auto& entry : catalog()) {
    auto sol = solve_series(entry.problem, 5);
    for (int i = 0; i < 10; ++i) {
      SamplePoint pt;
      std::size_t k = entry.problem.kind == ProblemKind::Pde ? 1 : entry.problem.field_count();
      for (std::size_t j = 0; j < k; ++j) pt.values.push_back(d(rng));
      auto v = series_values(sol, entry, pt, 0.0);
      auto r = reference_values(entry, pt, 0.0);
      for (std::size_t j = 0; j < v.size(); ++j) EXPECT_EQ(v[j], r[j]) << entry.name;
    }
  }
}

TEST(ApplySeriesToFunction, Examples) {
  auto growth = problem("-u");
  auto g = build_generator(growth);
  EXPECT_EQ(apply_series_to_function(g, D(growth, "c^2"), 3),
            (std::vector<Expr>{D(growth, "c^2"), D(growth, "2*c^2"), D(growth, "2*c^2"), D(growth, "4*c^2/3")}));
  for (const auto& entry : catalog()) {
    auto ge = build_generator(entry.problem);
    EXPECT_EQ(apply_series_to_function(ge, sym(entry.problem.data_symbol(0)), 4), lie_coefficients(ge, 4).coeffs[0]);
  }
}

TEST(Homomorphism, Examples) {
  auto growth = problem("-u");
  EXPECT_TRUE(check_homomorphism(build_generator(growth), D(growth, "c^2"), 7).passed());
  auto ric = problem("u^2");
  EXPECT_TRUE(check_homomorphism(build_generator(ric), D(ric, "c^2"), 5).passed());
  auto heat = problem("-u_xx", "pde");
  EXPECT_TRUE(check_homomorphism(build_generator(heat), D(heat, "c*c_x"), 3).passed());
}

TEST(Homomorphism, RandomPolynomialSeeds) {
  for (const char* name : {"riccati", "explicit_time", "burgers"}) {
    auto entry = catalog_entry(name);
    auto g = build_generator(entry.problem);
    JetGen gen(42, entry.problem);
    for (int i = 0; i < 6; ++i) {
      Expr G = subst(gen(), Symbol::aux(), entry.problem.initial_time);
      auto r = check_homomorphism(g, G, 3);
      EXPECT_TRUE(r.passed()) << name << " G = " << render(G, entry.problem.data_names());
    }
  }
}

TEST(DefiningResidual, VanishesForEveryCatalogEntryAndOrder) {
  for (const auto& entry : catalog())
    for (int n = 1; n <= 6; ++n) {
      auto r = defining_residual(solve_series(entry.problem, n));
      EXPECT_TRUE(r.passed()) << entry.name << " N=" << n;
      EXPECT_EQ(r.residual.at(0).size(), static_cast<std::size_t>(n));
    }
}

TEST(DefiningResidual, DetectsACorruptedCoefficient) {
  auto ric = problem("u^2");
  auto sol = solve_series(ric, 5);
  sol.coeffs[0][3] = sol.coeffs[0][3] + Expr(Rational(1, 1000)) * sym(ric.data_symbol(0));
  auto r = defining_residual(sol);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.first_failing_order, 3);
}
