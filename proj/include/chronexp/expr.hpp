#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chronexp/errors.hpp"
#include "chronexp/rational.hpp"
#include "chronexp/symbol.hpp"

namespace chronexp {

enum class ExprKind : std::uint8_t { Const, Sym, Func, Pow, Mul, Add };

namespace detail {
struct Node;
}

/// Immutable symbolic expression. Copies share the underlying tree.
///
/// The raw constructors (add, mul, pow, func) build trees verbatim; the
/// arithmetic operators and every algorithm below return canonical trees
/// (see normalize).
class Expr {
 public:
  Expr();
  Expr(long value);             // NOLINT(google-explicit-constructor)
  Expr(const Rational& value);  // NOLINT(google-explicit-constructor)

  static Expr constant(const Rational& value) { return Expr(value); }
  static Expr sym(const Symbol& symbol);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  static Expr pow(Expr base, long exponent);
  static Expr func(std::string name, Expr arg);

  ExprKind kind() const;
  const Rational& value() const;
  const Symbol& symbol() const;
  std::span<const Expr> args() const;
  const Expr& base() const;
  long exponent() const;
  const std::string& func_name() const;
  const Expr& arg() const;

  bool is_const() const { return kind() == ExprKind::Const; }
  bool is_zero() const { return is_const() && value().is_zero(); }
  bool is_one() const { return is_const() && value().is_one(); }
  bool is_symbol(const Symbol& s) const { return kind() == ExprKind::Sym && symbol() == s; }
  bool is_normalized() const;
  const void* identity() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
  friend struct detail::Node;
  friend Expr make_node(detail::Node node);

  std::shared_ptr<const detail::Node> node_;
};

using Bindings = std::map<Symbol, double>;
using Substitution = std::map<Symbol, Expr>;

namespace detail {

struct Node {
  ExprKind kind = ExprKind::Const;
  Rational value;
  std::optional<Symbol> symbol;
  std::string name;
  long exponent = 1;
  std::vector<Expr> args;
  bool normalized = false;
};

}  // namespace detail

inline Expr make_node(detail::Node node) {
  return Expr(std::make_shared<const detail::Node>(std::move(node)));
}

inline Expr::Expr() : Expr(0L) {}
inline Expr::Expr(long value) : Expr(Rational(value)) {}
inline Expr::Expr(const Rational& value) {
  detail::Node n;
  n.kind = ExprKind::Const;
  n.value = value;
  n.normalized = true;
  node_ = std::make_shared<const detail::Node>(std::move(n));
}
inline Expr Expr::sym(const Symbol& symbol) {
  detail::Node n;
  n.kind = ExprKind::Sym;
  n.symbol = symbol;
  n.normalized = true;
  return make_node(std::move(n));
}
inline Expr Expr::add(std::vector<Expr> terms) {
  detail::Node n;
  n.kind = ExprKind::Add;
  n.args = std::move(terms);
  return make_node(std::move(n));
}
inline Expr Expr::mul(std::vector<Expr> factors) {
  detail::Node n;
  n.kind = ExprKind::Mul;
  n.args = std::move(factors);
  return make_node(std::move(n));
}
inline Expr Expr::pow(Expr base, long exponent) {
  detail::Node n;
  n.kind = ExprKind::Pow;
  n.exponent = exponent;
  n.args.push_back(std::move(base));
  return make_node(std::move(n));
}
inline Expr Expr::func(std::string name, Expr arg) {
  detail::Node n;
  n.kind = ExprKind::Func;
  n.name = std::move(name);
  n.args.push_back(std::move(arg));
  return make_node(std::move(n));
}

inline ExprKind Expr::kind() const { return node_->kind; }
inline const Rational& Expr::value() const { return node_->value; }
inline const Symbol& Expr::symbol() const { return *node_->symbol; }
inline std::span<const Expr> Expr::args() const { return node_->args; }
inline const Expr& Expr::base() const { return node_->args.front(); }
inline long Expr::exponent() const { return node_->exponent; }
inline const std::string& Expr::func_name() const { return node_->name; }
inline const Expr& Expr::arg() const { return node_->args.front(); }
inline bool Expr::is_normalized() const { return node_->normalized; }

// ---------------------------------------------------------------------------
// Total order

namespace detail {

inline int kind_rank(ExprKind k) {
  switch (k) {
    case ExprKind::Const: return 0;
    case ExprKind::Sym: return 1;
    case ExprKind::Func: return 2;
    case ExprKind::Mul: return 3;
    case ExprKind::Add: return 4;
    case ExprKind::Pow: return 5;  // never used: powers compare through their base
  }
  return 6;
}

template <class T>
int three_way(const T& a, const T& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace detail

/// Fixed total order on trees. A power b^k sorts next to its base b (as if
/// b were b^1), so c, c^2, c_x, c_x^3 come out grouped by base.
inline int compare(const Expr& a, const Expr& b) {
  if (a.identity() == b.identity()) return 0;
  const bool pa = a.kind() == ExprKind::Pow;
  const bool pb = b.kind() == ExprKind::Pow;
  if (pa || pb) {
    const Expr& ba = pa ? a.base() : a;
    const Expr& bb = pb ? b.base() : b;
    if (int c = compare(ba, bb); c != 0) return c;
    if (int c = detail::three_way(pa ? a.exponent() : 1L, pb ? b.exponent() : 1L); c != 0)
      return c;
    return detail::three_way(static_cast<int>(pa), static_cast<int>(pb));
  }
  if (int c = detail::three_way(detail::kind_rank(a.kind()), detail::kind_rank(b.kind())); c != 0)
    return c;
  switch (a.kind()) {
    case ExprKind::Const:
      return detail::three_way(a.value(), b.value());
    case ExprKind::Sym:
      return detail::three_way(a.symbol(), b.symbol());
    case ExprKind::Func:
      if (int c = a.func_name().compare(b.func_name()); c != 0) return c < 0 ? -1 : 1;
      return compare(a.arg(), b.arg());
    default: {
      auto xa = a.args();
      auto xb = b.args();
      const std::size_t n = std::min(xa.size(), xb.size());
      for (std::size_t i = 0; i < n; ++i)
        if (int c = compare(xa[i], xb[i]); c != 0) return c;
      return detail::three_way(xa.size(), xb.size());
    }
  }
}

/// Structural (tree) equality.
inline bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// ---------------------------------------------------------------------------
// Function registry

/// Evaluation, derivative and exact constant folding for one elementary
/// function. `derivative` returns f'(arg) as an expression.
struct FunctionRule {
  std::function<double(double)> eval;
  std::function<Expr(const Expr&)> derivative;
  std::function<std::optional<Rational>(const Rational&)> fold;
};

class FunctionRegistry {
 public:
  static const FunctionRule* find(const std::string& name) {
    auto& self = instance();
    std::shared_lock lock(self.mutex_);
    auto it = self.rules_.find(name);
    return it == self.rules_.end() ? nullptr : &it->second;
  }

  /// Registers (or replaces) a rule. Rules must be registered before any
  /// concurrent use of expressions that mention them.
  static void add(const std::string& name, FunctionRule rule) {
    auto& self = instance();
    std::unique_lock lock(self.mutex_);
    self.rules_[name] = std::move(rule);
  }

  static bool contains(const std::string& name) { return find(name) != nullptr; }

 private:
  FunctionRegistry();
  static FunctionRegistry& instance() {
    static FunctionRegistry registry;
    return registry;
  }

  std::shared_mutex mutex_;
  std::map<std::string, FunctionRule> rules_;
};

// ---------------------------------------------------------------------------
// Canonical polynomial form

namespace detail {

struct Factor {
  Expr base;
  long exp;
};
using Monomial = std::vector<Factor>;

struct MonomialLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (int c = compare(a[i].base, b[i].base); c != 0) return c < 0;
      if (a[i].exp != b[i].exp) return a[i].exp < b[i].exp;
    }
    return a.size() < b.size();
  }
};

using Poly = std::map<Monomial, Rational, MonomialLess>;

inline void add_term(Poly& acc, const Monomial& m, const Rational& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = acc.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) acc.erase(it);
  }
}

inline Monomial merge(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    int c = compare(a[i].base, b[j].base);
    if (c < 0) {
      out.push_back(a[i++]);
    } else if (c > 0) {
      out.push_back(b[j++]);
    } else {
      long e = a[i].exp + b[j].exp;
      if (e != 0) out.push_back({a[i].base, e});
      ++i;
      ++j;
    }
  }
  for (; i < a.size(); ++i) out.push_back(a[i]);
  for (; j < b.size(); ++j) out.push_back(b[j]);
  return out;
}

inline Poly constant_poly(const Rational& c) {
  Poly p;
  if (!c.is_zero()) p.emplace(Monomial{}, c);
  return p;
}

inline Poly multiply(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) add_term(out, merge(ma, mb), ca * cb);
  return out;
}

inline Poly multiply(const Poly& a, const Monomial& m, const Rational& c) {
  Poly out;
  for (const auto& [ma, ca] : a) add_term(out, merge(ma, m), ca * c);
  return out;
}

inline Poly power(const Poly& p, long k) {
  Poly result = constant_poly(Rational(1));
  for (long i = 0; i < k; ++i) result = multiply(result, p);
  return result;
}

Poly to_poly(const Expr& e, const Substitution* sub = nullptr);
Expr from_poly(const Poly& p);

// Bases of negative powers are kept primitive: the first term of the sum has
// coefficient 1 and the scale moves to the enclosing monomial.
inline Poly reciprocal_power(const Poly& p, long k) {
  // k > 0; returns p^-k
  if (p.empty()) throw Error(ErrorKind::DivisionByZero, "division by zero");
  if (p.size() == 1) {
    const auto& [m, c] = *p.begin();
    Poly out = constant_poly(Rational(1) / c.pow(k));
    for (const auto& f : m) {
      long e = -f.exp * k;
      if (f.base.kind() == ExprKind::Add && e > 0) {
        out = multiply(out, power(to_poly(f.base), e));
      } else {
        out = multiply(out, Monomial{{f.base, e}}, Rational(1));
      }
    }
    return out;
  }
  // Lead coefficient: the first summand of the canonical sum.
  Expr sum = from_poly(p);
  const Expr& first = sum.args().front();
  Rational lead(1);
  if (first.kind() == ExprKind::Mul && first.args().front().is_const())
    lead = first.args().front().value();
  Poly scaled;
  for (const auto& [m, c] : p) scaled.emplace(m, c / lead);
  Expr base = from_poly(scaled);
  Poly out;
  out.emplace(Monomial{{base, -k}}, Rational(1) / lead.pow(k));
  return out;
}

inline Expr make_func(const std::string& name, const Expr& normalized_arg) {
  detail::Node n;
  n.kind = ExprKind::Func;
  n.name = name;
  n.args.push_back(normalized_arg);
  n.normalized = true;
  return make_node(std::move(n));
}

inline Poly to_poly(const Expr& e, const Substitution* sub) {
  switch (e.kind()) {
    case ExprKind::Const:
      return constant_poly(e.value());
    case ExprKind::Sym: {
      if (sub != nullptr) {
        auto it = sub->find(e.symbol());
        if (it != sub->end()) return to_poly(it->second);
      }
      Poly p;
      p.emplace(Monomial{{e, 1}}, Rational(1));
      return p;
    }
    case ExprKind::Add: {
      Poly acc;
      for (const auto& t : e.args())
        for (const auto& [m, c] : to_poly(t, sub)) add_term(acc, m, c);
      return acc;
    }
    case ExprKind::Mul: {
      Poly acc = constant_poly(Rational(1));
      for (const auto& f : e.args()) {
        acc = multiply(acc, to_poly(f, sub));
        if (acc.empty()) break;
      }
      return acc;
    }
    case ExprKind::Pow: {
      Poly b = to_poly(e.base(), sub);
      if (e.exponent() >= 0) return power(b, e.exponent());
      return reciprocal_power(b, -e.exponent());
    }
    case ExprKind::Func: {
      Expr arg = from_poly(to_poly(e.arg(), sub));
      if (arg.is_const()) {
        if (const FunctionRule* rule = FunctionRegistry::find(e.func_name());
            rule != nullptr && rule->fold) {
          if (auto folded = rule->fold(arg.value())) return constant_poly(*folded);
        }
      }
      Poly p;
      p.emplace(Monomial{{make_func(e.func_name(), arg), 1}}, Rational(1));
      return p;
    }
  }
  return {};
}

inline Expr normalized_node(detail::Node n) {
  n.normalized = true;
  return make_node(std::move(n));
}

inline Expr monomial_expr(const Monomial& m, const Rational& c) {
  std::vector<Expr> factors;
  factors.reserve(m.size() + 1);
  if (!c.is_one() || m.empty()) factors.emplace_back(c);
  for (const auto& f : m) {
    if (f.exp == 1) {
      factors.push_back(f.base);
    } else {
      detail::Node n;
      n.kind = ExprKind::Pow;
      n.exponent = f.exp;
      n.args.push_back(f.base);
      factors.push_back(normalized_node(std::move(n)));
    }
  }
  if (factors.size() == 1) return factors.front();
  detail::Node n;
  n.kind = ExprKind::Mul;
  n.args = std::move(factors);
  return normalized_node(std::move(n));
}

inline std::span<const Expr> term_factors(const Expr& t) {
  if (t.kind() != ExprKind::Mul) return {&t, 1};
  auto f = t.args();
  return f.front().is_const() ? f.subspan(1) : f;
}

// Order of Add children: by monomial (coefficient ignored; like terms are
// merged so monomials are distinct), the constant term last.
inline bool add_order(const Expr& a, const Expr& b) {
  if (a.is_const() != b.is_const()) return b.is_const();
  auto fa = term_factors(a);
  auto fb = term_factors(b);
  const std::size_t n = std::min(fa.size(), fb.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(fa[i], fb[i]); c != 0) return c < 0;
  if (fa.size() != fb.size()) return fa.size() < fb.size();
  return compare(a, b) < 0;
}

inline Expr from_poly(const Poly& p) {
  if (p.empty()) return Expr(0L);
  std::vector<Expr> terms;
  terms.reserve(p.size());
  for (const auto& [m, c] : p) terms.push_back(monomial_expr(m, c));
  if (terms.size() == 1) return terms.front();
  std::sort(terms.begin(), terms.end(), add_order);
  detail::Node n;
  n.kind = ExprKind::Add;
  n.args = std::move(terms);
  return normalized_node(std::move(n));
}

inline bool depends_on(const Expr& e, const Symbol& s) {
  switch (e.kind()) {
    case ExprKind::Const: return false;
    case ExprKind::Sym: return e.symbol() == s;
    default:
      for (const auto& a : e.args())
        if (depends_on(a, s)) return true;
      return false;
  }
}

Poly diff_poly(const Poly& p, const Symbol& s);

inline Poly diff_atom(const Expr& base, const Symbol& s) {
  switch (base.kind()) {
    case ExprKind::Sym:
      return base.symbol() == s ? constant_poly(Rational(1)) : Poly{};
    case ExprKind::Func: {
      if (!depends_on(base.arg(), s)) return {};
      const FunctionRule* rule = FunctionRegistry::find(base.func_name());
      if (rule == nullptr || !rule->derivative)
        throw Error(ErrorKind::UnsupportedFunction,
                    "no derivative rule for '" + base.func_name() + "'");
      return multiply(to_poly(rule->derivative(base.arg())),
                      diff_poly(to_poly(base.arg()), s));
    }
    default:
      if (!depends_on(base, s)) return {};
      return diff_poly(to_poly(base), s);
  }
}

inline Poly diff_poly(const Poly& p, const Symbol& s) {
  Poly out;
  for (const auto& [m, c] : p) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      Poly d = diff_atom(m[i].base, s);
      if (d.empty()) continue;
      Monomial rest;
      rest.reserve(m.size());
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (j != i) {
          rest.push_back(m[j]);
        } else if (m[j].exp != 1) {
          rest.push_back({m[j].base, m[j].exp - 1});
        }
      }
      for (const auto& [dm, dc] : d) add_term(out, merge(rest, dm), c * Rational(m[i].exp) * dc);
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations

/// Canonical representative: polynomial parts fully expanded with like terms
/// merged, constants folded, Add/Mul flattened and sorted. Positive powers of
/// sums are expanded; negative powers of sums stay as primitive atoms.
inline Expr normalize(const Expr& e) {
  if (e.is_normalized()) return e;
  return detail::from_poly(detail::to_poly(e));
}

inline Expr diff(const Expr& e, const Symbol& s) {
  return detail::from_poly(detail::diff_poly(detail::to_poly(e), s));
}

/// Simultaneous substitution of every mapped symbol, then normalize.
inline Expr subst(const Expr& e, const Substitution& sub) {
  return detail::from_poly(detail::to_poly(e, &sub));
}

inline Expr subst(const Expr& e, const Symbol& s, const Expr& value) {
  return subst(e, Substitution{{s, value}});
}

inline bool depends_on(const Expr& e, const Symbol& s) { return detail::depends_on(e, s); }

inline void collect_symbols(const Expr& e, std::set<Symbol>& out) {
  if (e.kind() == ExprKind::Sym) {
    out.insert(e.symbol());
    return;
  }
  for (const auto& a : e.args()) collect_symbols(a, out);
}

inline std::set<Symbol> free_symbols(const Expr& e) {
  std::set<Symbol> out;
  collect_symbols(e, out);
  return out;
}

/// Number of summands of a canonical expression (0 for zero).
inline std::size_t term_count(const Expr& e) {
  if (e.is_zero()) return 0;
  return e.kind() == ExprKind::Add ? e.args().size() : 1;
}

/// Coefficients of var^0, var^1, ... when e is a polynomial in var (other
/// symbols arbitrary); nullopt if var occurs under a function, in a negative
/// power, or inside the base of a power of a sum.
inline std::optional<std::vector<Expr>> polynomial_coefficients(const Expr& e,
                                                                const Symbol& var) {
  std::vector<detail::Poly> parts;
  for (const auto& [m, c] : detail::to_poly(e)) {
    long degree = 0;
    detail::Monomial rest;
    for (const auto& f : m) {
      if (f.base.is_symbol(var)) {
        if (f.exp < 0) return std::nullopt;
        degree = f.exp;
      } else if (detail::depends_on(f.base, var)) {
        return std::nullopt;
      } else {
        rest.push_back(f);
      }
    }
    if (parts.size() <= static_cast<std::size_t>(degree)) parts.resize(static_cast<std::size_t>(degree) + 1);
    detail::add_term(parts[static_cast<std::size_t>(degree)], rest, c);
  }
  std::vector<Expr> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(detail::from_poly(p));
  return out;
}

inline bool is_polynomial_in(const Expr& e, const Symbol& var) {
  return polynomial_coefficients(e, var).has_value();
}

inline double eval_num(const Expr& e, const Bindings& bindings) {
  switch (e.kind()) {
    case ExprKind::Const:
      return e.value().to_double();
    case ExprKind::Sym: {
      auto it = bindings.find(e.symbol());
      if (it == bindings.end()) throw Error(ErrorKind::UnboundSymbol, "symbol has no binding");
      return it->second;
    }
    case ExprKind::Add: {
      double s = 0.0;
      for (const auto& a : e.args()) s += eval_num(a, bindings);
      return s;
    }
    case ExprKind::Mul: {
      double p = 1.0;
      for (const auto& a : e.args()) p *= eval_num(a, bindings);
      return p;
    }
    case ExprKind::Pow: {
      double b = eval_num(e.base(), bindings);
      if (b == 0.0 && e.exponent() < 0)
        throw Error(ErrorKind::DomainError, "zero raised to a negative power");
      return std::pow(b, static_cast<double>(e.exponent()));
    }
    case ExprKind::Func: {
      const FunctionRule* rule = FunctionRegistry::find(e.func_name());
      if (rule == nullptr || !rule->eval)
        throw Error(ErrorKind::UnsupportedFunction, "cannot evaluate '" + e.func_name() + "'");
      return rule->eval(eval_num(e.arg(), bindings));
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Arithmetic (canonical results)

inline Expr operator+(const Expr& a, const Expr& b) { return normalize(Expr::add({a, b})); }
inline Expr operator-(const Expr& a) { return normalize(Expr::mul({Expr(-1L), a})); }
inline Expr operator-(const Expr& a, const Expr& b) {
  return normalize(Expr::add({a, Expr::mul({Expr(-1L), b})}));
}
inline Expr operator*(const Expr& a, const Expr& b) { return normalize(Expr::mul({a, b})); }
inline Expr operator/(const Expr& a, const Expr& b) {
  return normalize(Expr::mul({a, Expr::pow(b, -1)}));
}
inline Expr pow(const Expr& base, long k) { return normalize(Expr::pow(base, k)); }
inline Expr sym(const Symbol& s) { return Expr::sym(s); }
inline Expr call(const std::string& name, const Expr& arg) {
  return normalize(Expr::func(name, arg));
}

inline FunctionRegistry::FunctionRegistry() {
  auto fold_zero_to = [](long at_zero) {
    return [at_zero](const Rational& r) -> std::optional<Rational> {
      if (r.is_zero()) return Rational(at_zero);
      return std::nullopt;
    };
  };
  rules_["sin"] = {[](double x) { return std::sin(x); },
                   [](const Expr& x) { return call("cos", x); }, fold_zero_to(0)};
  rules_["cos"] = {[](double x) { return std::cos(x); },
                   [](const Expr& x) { return -call("sin", x); }, fold_zero_to(1)};
  rules_["exp"] = {[](double x) { return std::exp(x); },
                   [](const Expr& x) { return call("exp", x); }, fold_zero_to(1)};
  rules_["ln"] = {[](double x) {
                    if (x <= 0.0) throw Error(ErrorKind::DomainError, "ln of non-positive value");
                    return std::log(x);
                  },
                  [](const Expr& x) { return pow(x, -1); },
                  [](const Rational& r) -> std::optional<Rational> {
                    if (r.is_one()) return Rational(0);
                    return std::nullopt;
                  }};
  rules_["sqrt"] = {[](double x) {
                      if (x < 0.0) throw Error(ErrorKind::DomainError, "sqrt of negative value");
                      return std::sqrt(x);
                    },
                    [](const Expr& x) {
                      return Expr(Rational(1, 2)) * pow(call("sqrt", x), -1);
                    },
                    [](const Rational& r) { return r.exact_sqrt(); }};
}

}  // namespace chronexp
