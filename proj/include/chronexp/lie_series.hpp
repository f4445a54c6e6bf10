#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chronexp/errors.hpp"
#include "chronexp/expr.hpp"
#include "chronexp/parser.hpp"

namespace chronexp {

/// The derivation Delta(s) of a problem: its right-hand sides with the time
/// variable renamed to the auxiliary variable s. The generator acting on an
/// expression e is
///
///   A[e] = sum_j sum_alpha D_x^alpha(F_j) * de/d(D^alpha c_j)  -  de/ds
///
/// which for ODEs reduces to sum_j F_j de/dc_j - de/ds.
struct Generator {
  ProblemSpec problem;
  std::vector<Expr> substituted_rhs;
};

inline Generator build_generator(const ProblemSpec& p) {
  Generator g{p, {}};
  g.substituted_rhs.reserve(p.rhs.size());
  for (const auto& f : p.rhs) g.substituted_rhs.push_back(subst(f, Symbol::time(), sym(Symbol::aux())));
  return g;
}

/// D_{x_j} e = de/dx_j + sum over jets J in e of J_{+e_j} * de/dJ.
inline Expr total_derivative(const Expr& e, int space_index) {
  std::vector<Expr> terms{diff(e, Symbol::space(space_index))};
  for (const auto& s : free_symbols(e)) {
    if (!s.is(SymbolClass::Jet)) continue;
    terms.push_back(Expr::mul({sym(s.shifted(space_index)), diff(e, s)}));
  }
  return normalize(Expr::add(std::move(terms)));
}

/// D^alpha applied by repeated total derivatives, lowest index first.
inline Expr total_derivative(const Expr& e, const MultiIndex& alpha) {
  Expr out = e;
  for (std::size_t j = 0; j < alpha.size(); ++j)
    for (int r = 0; r < alpha[j]; ++r) out = total_derivative(out, static_cast<int>(j));
  return out;
}

/// Memoized D^alpha F_k for one generator. Not shareable across threads.
class Prolongation {
 public:
  explicit Prolongation(const Generator& g) : g_(g) {}

  const Expr& of(const Symbol& jet) {
    if (auto it = cache_.find(jet); it != cache_.end()) return it->second;
    Expr value;
    const MultiIndex& alpha = jet.alpha();
    auto j = std::find_if(alpha.begin(), alpha.end(), [](int a) { return a > 0; });
    if (j == alpha.end()) {
      value = g_.substituted_rhs.at(static_cast<std::size_t>(jet.index()));
    } else {
      MultiIndex lower = alpha;
      --*(lower.begin() + (j - alpha.begin()));
      value = total_derivative(of(Symbol::jet(jet.index(), lower)), static_cast<int>(j - alpha.begin()));
    }
    return cache_.emplace(jet, std::move(value)).first->second;
  }

 private:
  const Generator& g_;
  std::map<Symbol, Expr> cache_;
};

/// With `include_aux_shift` false the -d/ds term is left out; for autonomous
/// right-hand sides both variants agree.
inline Expr apply_generator(const Generator& g, const Expr& e, Prolongation& prolong,
                            bool include_aux_shift = true) {
  std::vector<Expr> terms;
  for (const auto& s : free_symbols(e)) {
    if (!s.is(SymbolClass::Jet)) continue;
    Expr de = diff(e, s);
    if (de.is_zero()) continue;
    terms.push_back(Expr::mul({prolong.of(s), de}));
  }
  if (include_aux_shift) terms.push_back(Expr::mul({Expr(-1L), diff(e, Symbol::aux())}));
  return normalize(Expr::add(std::move(terms)));
}

inline Expr apply_generator(const Generator& g, const Expr& e, bool include_aux_shift = true) {
  Prolongation prolong(g);
  return apply_generator(g, e, prolong, include_aux_shift);
}

struct SeriesOptions {
  /// Largest number of monomials any intermediate A^n[e] may have.
  std::size_t term_budget = 1'000'000;
  bool include_aux_shift = true;
};

/// u_i = sum_n coeffs[i][n] (t - a)^n, truncated at `order`.
struct SeriesSolution {
  ProblemSpec problem;
  Expr expansion_point;
  int order = 0;
  std::vector<std::vector<Expr>> coeffs;
};

/// Coefficients (-1)^n / n! * A^n[seed] |_{s=a}, n = 0..order.
inline std::vector<Expr> apply_series_to_function(const Generator& g, const Expr& seed, int order,
                                                  const SeriesOptions& opts = {}) {
  if (order < 0) throw Error(ErrorKind::ValidationError, "order must be non-negative");
  Prolongation prolong(g);
  const Expr& a = g.problem.initial_time;
  std::vector<Expr> out;
  out.reserve(static_cast<std::size_t>(order) + 1);
  Expr current = normalize(seed);
  for (int n = 0; n <= order; ++n) {
    Rational scale = Rational(n % 2 == 0 ? 1 : -1) / Rational::factorial(n);
    out.push_back(Expr(scale) * subst(current, Symbol::aux(), a));
    if (n == order) break;
    current = apply_generator(g, current, prolong, opts.include_aux_shift);
    if (term_count(current) > opts.term_budget)
      throw Error(ErrorKind::ExpressionBlowup,
                  "order " + std::to_string(n + 1) + " has " + std::to_string(term_count(current)) +
                      " terms, budget is " + std::to_string(opts.term_budget));
  }
  return out;
}

inline SeriesSolution lie_coefficients(const Generator& g, int order, const SeriesOptions& opts = {}) {
  SeriesSolution sol{g.problem, g.problem.initial_time, order, {}};
  for (std::size_t i = 0; i < g.problem.field_count(); ++i)
    sol.coeffs.push_back(apply_series_to_function(g, sym(g.problem.data_symbol(i)), order, opts));
  return sol;
}

inline SeriesSolution solve_series(const ProblemSpec& p, int order, const SeriesOptions& opts = {}) {
  return lie_coefficients(build_generator(p), order, opts);
}

/// Every jet symbol that occurs in the coefficients.
inline std::set<Symbol> required_jets(const SeriesSolution& sol) {
  std::set<Symbol> out;
  for (const auto& column : sol.coeffs)
    for (const auto& c : column)
      for (const auto& s : free_symbols(c))
        if (s.is(SymbolClass::Jet)) out.insert(s);
  return out;
}

/// Bindings for the jets of given initial functions c_k(x) at one point x.
inline Bindings initial_jet_bindings(const ProblemSpec& p, const std::vector<Expr>& initial_functions,
                                     const std::vector<double>& point,
                                     const std::set<Symbol>& jets) {
  Bindings b;
  for (std::size_t j = 0; j < point.size(); ++j) b[Symbol::space(static_cast<int>(j))] = point[j];
  for (std::size_t k = 0; k < p.field_count(); ++k) b[p.data_symbol(k)] = 0.0;
  std::set<Symbol> wanted = jets;
  for (std::size_t k = 0; k < p.field_count(); ++k) wanted.insert(p.data_symbol(k));
  for (const auto& jet : wanted) {
    if (!jet.is(SymbolClass::Jet)) continue;
    const Expr& f = initial_functions.at(static_cast<std::size_t>(jet.index()));
    Expr d = f;
    for (std::size_t j = 0; j < jet.alpha().size(); ++j)
      for (int r = 0; r < jet.alpha()[j]; ++r) d = diff(d, Symbol::space(static_cast<int>(j)));
    b[jet] = eval_num(d, b);
  }
  return b;
}

/// Horner evaluation of every field at time t. `data` binds the jets and any
/// parameters (and the initial time, when it is symbolic).
inline std::vector<double> eval_series(const SeriesSolution& sol, double t, const Bindings& data) {
  const double h = t - eval_num(sol.expansion_point, data);
  std::vector<double> out;
  for (const auto& column : sol.coeffs) {
    double acc = 0.0;
    for (auto it = column.rbegin(); it != column.rend(); ++it) acc = acc * h + eval_num(*it, data);
    out.push_back(acc);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncated power series in h = t - a (the Time symbol stands for h)

/// Coefficients of var^0..var^order of e around var = 0.
inline std::vector<Expr> taylor_coefficients(const Expr& e, const Symbol& var, int order) {
  std::vector<Expr> out;
  if (auto poly = polynomial_coefficients(e, var)) {
    for (int n = 0; n <= order; ++n)
      out.push_back(static_cast<std::size_t>(n) < poly->size() ? (*poly)[static_cast<std::size_t>(n)] : Expr(0L));
    return out;
  }
  Expr d = normalize(e);
  for (int n = 0; n <= order; ++n) {
    out.push_back(Expr(Rational(1) / Rational::factorial(n)) * subst(d, var, Expr(0L)));
    d = diff(d, var);
  }
  return out;
}

inline Expr series_polynomial(const std::vector<Expr>& coeffs, const Symbol& var) {
  std::vector<Expr> terms;
  for (std::size_t n = 0; n < coeffs.size(); ++n)
    terms.push_back(Expr::mul({coeffs[n], Expr::pow(sym(var), static_cast<long>(n))}));
  return normalize(Expr::add(std::move(terms)));
}

/// Substitution sending every jet of `e` to the matching derivative of the
/// truncated series, as a polynomial in the Time symbol.
inline Substitution jet_series_substitution(const SeriesSolution& sol, const Expr& e) {
  Substitution sub;
  std::map<Symbol, std::vector<Expr>> cache;
  for (const auto& s : free_symbols(e)) {
    if (!s.is(SymbolClass::Jet)) continue;
    const auto& column = sol.coeffs.at(static_cast<std::size_t>(s.index()));
    std::vector<Expr> derived;
    for (const auto& c : column) derived.push_back(total_derivative(c, s.alpha()));
    sub.emplace(s, series_polynomial(derived, Symbol::time()));
  }
  return sub;
}

/// G(u, D^alpha u) with u the truncated series, as coefficients in (t - a).
inline std::vector<Expr> compose_truncated(const Expr& g, const SeriesSolution& sol, int order) {
  return taylor_coefficients(subst(g, jet_series_substitution(sol, g)), Symbol::time(), order);
}

struct HomomorphismReport {
  std::vector<Expr> series_side;
  std::vector<Expr> composed_side;
  std::vector<bool> order_equal;
  int first_mismatch = -1;
  bool passed() const { return first_mismatch < 0; }
};

/// Compares the Lie series of G with G composed with the Lie series of the
/// coordinates, order by order.
inline HomomorphismReport check_homomorphism(const Generator& g, const Expr& G, int order,
                                             const SeriesOptions& opts = {}) {
  HomomorphismReport r;
  r.series_side = apply_series_to_function(g, G, order, opts);
  r.composed_side = compose_truncated(G, lie_coefficients(g, order, opts), order);
  for (int n = 0; n <= order; ++n) {
    bool eq = r.series_side[static_cast<std::size_t>(n)] == r.composed_side[static_cast<std::size_t>(n)];
    r.order_equal.push_back(eq);
    if (!eq && r.first_mismatch < 0) r.first_mismatch = n;
  }
  return r;
}

struct ResidualReport {
  /// residual[i][n]: coefficient of (t - a)^n in du_i/dt + F_i, n < order.
  std::vector<std::vector<Expr>> residual;
  /// Lowest series order whose coefficient breaks the equation, or -1.
  int first_failing_order = -1;
  bool passed() const { return first_failing_order < 0; }
};

/// Plugs the truncated series into du_i/dt + F_i(t, x, u, D^alpha u) of
/// `equation` (which defaults to the series' own problem). A correct
/// series of order N leaves a residual that vanishes through (t - a)^(N-1).
inline ResidualReport defining_residual(const SeriesSolution& sol,
                                        const std::optional<ProblemSpec>& equation = std::nullopt) {
  const ProblemSpec& eq = equation ? *equation : sol.problem;
  const Symbol h = Symbol::time();
  ResidualReport r;
  for (std::size_t i = 0; i < eq.field_count(); ++i) {
    const Expr& f = eq.rhs.at(i);
    Substitution sub = jet_series_substitution(sol, f);
    sub.emplace(h, normalize(Expr::add({sym(h), sol.expansion_point})));
    std::vector<Expr> du;
    const auto& column = sol.coeffs.at(i);
    for (std::size_t n = 1; n < column.size(); ++n) du.push_back(Expr(static_cast<long>(n)) * column[n]);
    Expr total = normalize(Expr::add({series_polynomial(du, h), subst(f, sub)}));
    std::vector<Expr> coeffs = taylor_coefficients(total, h, sol.order - 1);
    coeffs.resize(static_cast<std::size_t>(std::max(sol.order, 0)));
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
      if (!coeffs[n].is_zero()) {
        int failing = static_cast<int>(n) + 1;
        if (r.first_failing_order < 0 || failing < r.first_failing_order) r.first_failing_order = failing;
      }
    }
    r.residual.push_back(std::move(coeffs));
  }
  return r;
}

}  // namespace chronexp
