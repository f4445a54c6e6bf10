#pragma once

// Seeded random expressions for the property tests. Bases of negative powers
// are single symbols so that evaluation away from zero stays finite.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chronexp/expr.hpp"
#include "chronexp/parser.hpp"

namespace gen {

using chronexp::Expr;
using chronexp::Rational;
using chronexp::Symbol;

/// Names for t, s, a, x, c, c_x, c_xx: one space variable and one field.
inline chronexp::NameTable names() {
  chronexp::NameTable n;
  n.space = {"x"};
  n.fields = {"c"};
  return n;
}

inline Symbol symbol_named(const std::string& text) { return chronexp::parse_expression(text, names()).symbol(); }

struct Pool {
  std::vector<Symbol> symbols;
  std::vector<std::string> functions{"sin", "cos", "exp"};
};

inline Pool default_pool() {
  Pool p;
  for (const char* n : {"t", "s", "a", "x", "c", "c_x", "c_xx"}) p.symbols.push_back(symbol_named(n));
  return p;
}

class ExprGen {
 public:
  explicit ExprGen(std::uint64_t seed, Pool pool = default_pool(), bool with_functions = true)
      : rng_(seed), pool_(std::move(pool)), functions_(with_functions) {}

  Expr operator()(int depth = 3) { return node(depth); }

  Symbol any_symbol() { return pool_.symbols[pick(pool_.symbols.size())]; }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Expr leaf() {
    if (range(0, 3) == 0) {
      long num = range(-5, 5);
      long den = range(1, 4);
      return Expr(Rational(num, den));
    }
    return chronexp::sym(any_symbol());
  }

  Expr node(int depth) {
    if (depth <= 0) return leaf();
    switch (range(0, functions_ ? 5 : 4)) {
      case 0:
        return leaf();
      case 1:
      case 2: {
        std::vector<Expr> terms;
        for (int i = range(2, 3); i > 0; --i) terms.push_back(node(depth - 1));
        return Expr::add(std::move(terms));
      }
      case 3: {
        std::vector<Expr> factors;
        for (int i = range(2, 3); i > 0; --i) factors.push_back(node(depth - 1));
        return Expr::mul(std::move(factors));
      }
      case 4: {
        if (range(0, 2) == 0) return Expr::pow(chronexp::sym(any_symbol()), range(-2, -1));
        return Expr::pow(node(depth - 1), range(2, 3));
      }
      default:
        return Expr::func(pool_.functions[pick(pool_.functions.size())], node(depth - 1));
    }
  }

  std::mt19937_64 rng_;
  Pool pool_;
  bool functions_;
};

/// Values in [0.5, 1.5] for every symbol of the pool.
inline chronexp::Bindings random_bindings(std::mt19937_64& rng, const Pool& pool = default_pool()) {
  std::uniform_real_distribution<double> d(0.5, 1.5);
  chronexp::Bindings b;
  for (const auto& s : pool.symbols) b[s] = d(rng);
  return b;
}

}  // namespace gen
