#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronexp/errors.hpp"
#include "chronexp/expr.hpp"

namespace chronexp {

/// Spelling of every symbol class, used in both directions (parse/render).
/// An empty `aux` or `initial_time` means that symbol is not spellable.
struct NameTable {
  std::string time = "t";
  std::string aux = "s";
  std::string initial_time = "a";
  std::vector<std::string> space = {"x", "y", "z"};
  std::vector<std::string> fields = {"c"};
  std::vector<std::string> params;

  std::string name_of(const Symbol& s) const {
    switch (s.cls()) {
      case SymbolClass::Time: return time;
      case SymbolClass::Aux: return aux;
      case SymbolClass::InitialTime: return s.name().empty() ? initial_time : s.name();
      case SymbolClass::FreeParam: return s.name();
      case SymbolClass::SpaceVar: return space_name(s.index());
      case SymbolClass::Jet: {
        auto k = static_cast<std::size_t>(s.index());
        std::string out = k < fields.size() ? fields[k] : "c" + std::to_string(k + 1);
        if (s.jet_order() > 0) {
          out += '_';
          for (std::size_t j = 0; j < s.alpha().size(); ++j)
            out.append(static_cast<std::size_t>(s.alpha()[j]), space_name(static_cast<int>(j))[0]);
        }
        return out;
      }
    }
    return "?";
  }

  std::string space_name(int j) const {
    auto k = static_cast<std::size_t>(j);
    return k < space.size() ? space[k] : "x" + std::to_string(j + 1);
  }
};

struct ParseOptions {
  int max_jet_order = 8;
};

// ---------------------------------------------------------------------------
// Expression parser

namespace detail {

enum class TokenKind { Number, Ident, Op, LParen, RParen, End };

struct Token {
  TokenKind kind;
  std::string text;
  SourceSpan span;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      std::string text(src.substr(start, i - start));
      if (text == ".") throw Error(ErrorKind::SyntaxError, "stray '.'", SourceSpan{start, i});
      out.push_back({TokenKind::Number, text, {start, i}});
    } else if (std::isalpha(static_cast<unsigned char>(ch))) {
      while (i < src.size() && std::isalnum(static_cast<unsigned char>(src[i]))) ++i;
      if (i < src.size() && src[i] == '_') {
        ++i;
        while (i < src.size() && std::isalnum(static_cast<unsigned char>(src[i]))) ++i;
      }
      out.push_back({TokenKind::Ident, std::string(src.substr(start, i - start)), {start, i}});
    } else if (ch == '(') {
      out.push_back({TokenKind::LParen, "(", {start, ++i}});
    } else if (ch == ')') {
      out.push_back({TokenKind::RParen, ")", {start, ++i}});
    } else if (std::string_view("+-*/^").find(ch) != std::string_view::npos) {
      out.push_back({TokenKind::Op, std::string(1, ch), {start, ++i}});
    } else {
      throw Error(ErrorKind::SyntaxError, std::string("unexpected character '") + ch + "'",
                  SourceSpan{start, start + 1});
    }
  }
  out.push_back({TokenKind::End, "", {src.size(), src.size()}});
  return out;
}

inline Rational parse_number(const Token& tok) {
  const std::string& t = tok.text;
  auto e = t.find_first_of("eE");
  Rational mantissa = Rational::parse(t.substr(0, e));
  if (e == std::string::npos) return mantissa;
  long exponent = std::stol(t.substr(e + 1));
  return mantissa * Rational(10).pow(exponent);
}

// precedence: ^ (right) > unary minus > * / > + -
class ExprParser {
 public:
  ExprParser(std::string_view src, const NameTable& names, const ParseOptions& opts)
      : tokens_(tokenize(src)), names_(names), opts_(opts) {}

  Expr parse() {
    Expr e = parse_sum();
    if (peek().kind != TokenKind::End)
      throw Error(ErrorKind::SyntaxError, "unexpected '" + peek().text + "'", peek().span);
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }
  bool at_op(char op) const { return peek().kind == TokenKind::Op && peek().text[0] == op; }

  Expr parse_sum() {
    std::vector<Expr> terms{parse_product()};
    while (at_op('+') || at_op('-')) {
      bool minus = next().text[0] == '-';
      Expr t = parse_product();
      terms.push_back(minus ? Expr::mul({Expr(-1L), t}) : t);
    }
    return terms.size() == 1 ? terms.front() : Expr::add(std::move(terms));
  }

  Expr parse_product() {
    std::vector<Expr> factors{parse_unary()};
    while (at_op('*') || at_op('/')) {
      bool divide = next().text[0] == '/';
      Expr f = parse_unary();
      factors.push_back(divide ? Expr::pow(f, -1) : f);
    }
    return factors.size() == 1 ? factors.front() : Expr::mul(std::move(factors));
  }

  Expr parse_unary() {
    if (at_op('-')) {
      next();
      return Expr::mul({Expr(-1L), parse_unary()});
    }
    if (at_op('+')) {
      next();
      return parse_unary();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!at_op('^')) return base;
    const Token& caret = next();
    std::size_t start = peek().span.start;
    Expr exponent = normalize(parse_unary());
    SourceSpan span{start, tokens_[pos_ - 1].span.end};
    if (!exponent.is_const() || !exponent.value().is_integer())
      throw Error(ErrorKind::SyntaxError, "exponent must be an integer constant", span);
    auto k = exponent.value().to_long();
    if (!k) throw Error(ErrorKind::SyntaxError, "exponent out of range", span);
    (void)caret;
    return Expr::pow(base, *k);
  }

  Expr parse_primary() {
    const Token& tok = next();
    switch (tok.kind) {
      case TokenKind::Number:
        return Expr(parse_number(tok));
      case TokenKind::LParen: {
        Expr e = parse_sum();
        if (peek().kind != TokenKind::RParen)
          throw Error(ErrorKind::SyntaxError, "expected ')'", peek().span);
        next();
        return e;
      }
      case TokenKind::Ident: {
        if (peek().kind == TokenKind::LParen) {
          if (!FunctionRegistry::contains(tok.text))
            throw Error(ErrorKind::UnsupportedFunction, "unsupported function '" + tok.text + "'",
                        tok.span);
          next();
          Expr arg = parse_sum();
          if (peek().kind != TokenKind::RParen)
            throw Error(ErrorKind::SyntaxError, "expected ')'", peek().span);
          next();
          return Expr::func(tok.text, arg);
        }
        return Expr::sym(classify(tok));
      }
      case TokenKind::End:
        throw Error(ErrorKind::SyntaxError, "unexpected end of input", tok.span);
      default:
        throw Error(ErrorKind::SyntaxError, "unexpected '" + tok.text + "'", tok.span);
    }
  }

  Symbol classify(const Token& tok) const {
    const std::string& id = tok.text;
    auto in = [](const std::vector<std::string>& v, const std::string& s) {
      return std::find(v.begin(), v.end(), s) - v.begin();
    };
    const auto m = names_.space.size();
    if (auto us = id.find('_'); us != std::string::npos) {
      std::string base = id.substr(0, us);
      std::string suffix = id.substr(us + 1);
      auto k = static_cast<std::size_t>(in(names_.fields, base));
      if (k == names_.fields.size() || suffix.empty() || m == 0)
        throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + id + "'", tok.span);
      MultiIndex alpha(m, 0);
      for (char ch : suffix) {
        auto j = static_cast<std::size_t>(in(names_.space, std::string(1, ch)));
        if (j == m)
          throw Error(ErrorKind::UnknownIdentifier,
                      "'" + std::string(1, ch) + "' is not a space variable in '" + id + "'",
                      tok.span);
        alpha[j] += 1;
      }
      if (static_cast<int>(suffix.size()) > opts_.max_jet_order)
        throw Error(ErrorKind::MixedDerivativeOrderTooHigh,
                    "derivative order of '" + id + "' exceeds " +
                        std::to_string(opts_.max_jet_order),
                    tok.span);
      return Symbol::jet(static_cast<int>(k), std::move(alpha));
    }
    if (id == names_.time) return Symbol::time();
    if (!names_.aux.empty() && id == names_.aux) return Symbol::aux();
    if (auto k = static_cast<std::size_t>(in(names_.fields, id)); k < names_.fields.size())
      return Symbol::jet(static_cast<int>(k), MultiIndex(m, 0));
    if (auto j = static_cast<std::size_t>(in(names_.space, id)); j < m)
      return Symbol::space(static_cast<int>(j));
    if (in(names_.params, id) < static_cast<std::ptrdiff_t>(names_.params.size()))
      return Symbol::param(id);
    if (!names_.initial_time.empty() && id == names_.initial_time)
      return Symbol::initial_time(id);
    throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + id + "'", tok.span);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const NameTable& names_;
  ParseOptions opts_;
};

}  // namespace detail

/// Parses an expression and returns its canonical form.
inline Expr parse_expression(std::string_view text, const NameTable& names,
                             const ParseOptions& opts = {}) {
  return normalize(detail::ExprParser(text, names, opts).parse());
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline bool is_negative_term(const Expr& e) {
  if (e.is_const()) return e.value().sign() < 0;
  return e.kind() == ExprKind::Mul && e.args().front().is_const() &&
         e.args().front().value().sign() < 0;
}

std::string render_canonical(const Expr& e, const NameTable& names);

inline std::string render_atom(const Expr& e, const NameTable& names) {
  switch (e.kind()) {
    case ExprKind::Sym:
      return names.name_of(e.symbol());
    case ExprKind::Func:
      return e.func_name() + "(" + render_canonical(e.arg(), names) + ")";
    case ExprKind::Const:
      if (e.value().is_integer() && e.value().sign() >= 0) return e.value().str();
      [[fallthrough]];
    default:
      return "(" + render_canonical(e, names) + ")";
  }
}

inline std::string render_power(const Expr& base, long k, const NameTable& names) {
  std::string b = render_atom(base, names);
  return k == 1 ? b : b + "^" + std::to_string(k);
}

// Mul: sign, numerator (coefficient numerator and positive powers), then
// "/d" for the coefficient denominator and each negative power.
inline std::string render_product(const Expr& e, const NameTable& names) {
  Rational coef(1);
  std::vector<std::string> num, den;
  for (const auto& f : e.args()) {
    if (f.is_const()) {
      coef = f.value();
    } else if (f.kind() == ExprKind::Pow && f.exponent() < 0) {
      den.push_back(render_power(f.base(), -f.exponent(), names));
    } else if (f.kind() == ExprKind::Pow) {
      num.push_back(render_power(f.base(), f.exponent(), names));
    } else {
      num.push_back(render_atom(f, names));
    }
  }
  std::string out = coef.sign() < 0 ? "-" : "";
  Rational mag = coef.sign() < 0 ? -coef : coef;
  std::string n = mag.numerator().get_str();
  if (n != "1" || num.empty()) num.insert(num.begin(), n);
  for (std::size_t i = 0; i < num.size(); ++i) out += (i ? "*" : "") + num[i];
  if (mag.denominator() != 1) out += "/" + mag.denominator().get_str();
  for (const auto& d : den) out += "/" + d;
  return out;
}

inline std::string render_canonical(const Expr& e, const NameTable& names) {
  switch (e.kind()) {
    case ExprKind::Const:
      return e.value().str();
    case ExprKind::Sym:
    case ExprKind::Func:
      return render_atom(e, names);
    case ExprKind::Pow:
      if (e.exponent() < 0) return "1/" + render_power(e.base(), -e.exponent(), names);
      return render_power(e.base(), e.exponent(), names);
    case ExprKind::Mul:
      return render_product(e, names);
    case ExprKind::Add: {
      std::string out;
      bool first = true;
      for (const auto& t : e.args()) {
        if (first) {
          out = render_canonical(t, names);
          first = false;
        } else if (is_negative_term(t)) {
          out += " - " + render_canonical(normalize(Expr::mul({Expr(-1L), t})), names);
        } else {
          out += " + " + render_canonical(t, names);
        }
      }
      return out;
    }
  }
  return {};
}

}  // namespace detail

/// Text form of normalize(e); parse_expression(render(e)) gives it back.
inline std::string render(const Expr& e, const NameTable& names = {}) {
  return detail::render_canonical(normalize(e), names);
}

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << render(e); }

// ---------------------------------------------------------------------------
// Problem documents

enum class ProblemKind { Ode, System, Pde };

inline const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Ode: return "ode";
    case ProblemKind::System: return "system";
    case ProblemKind::Pde: return "pde";
  }
  return "?";
}

/// A Cauchy problem  du_i/dt + F_i(t, x, u, D^alpha u) = 0,  u_i(a) = c_i.
///
/// NOTE: `rhs` holds F_i of that form, i.e. the NEGATED velocity. u' = u is
/// written with rhs "-u".
struct ProblemSpec {
  ProblemKind kind = ProblemKind::Ode;
  std::string time_name = "t";
  Expr initial_time;
  std::string initial_text = "0";
  std::vector<std::string> space_names;
  std::vector<std::string> field_names;
  std::vector<std::string> params;
  /// F_i over field jets Jet(i, alpha); indexed like field_names.
  std::vector<Expr> rhs;
  int order = 6;
  /// Optional catalog entry this document claims to be an instance of.
  std::optional<std::string> reference;

  std::size_t field_count() const { return field_names.size(); }
  std::size_t space_count() const { return space_names.size(); }

  /// The bare initial-data symbol c_k (all-zero multi-index).
  Symbol data_symbol(std::size_t k) const {
    return Symbol::jet(static_cast<int>(k), MultiIndex(space_count(), 0));
  }

  bool symbolic_initial_time() const { return initial_time.kind() == ExprKind::Sym; }

  std::string initial_time_name() const {
    return symbolic_initial_time() ? initial_time.symbol().name() : std::string();
  }

  std::vector<std::string> reserved_names() const {
    std::vector<std::string> out{time_name};
    out.insert(out.end(), space_names.begin(), space_names.end());
    out.insert(out.end(), field_names.begin(), field_names.end());
    out.insert(out.end(), params.begin(), params.end());
    if (symbolic_initial_time()) out.push_back(initial_time_name());
    return out;
  }

  /// Names used in problem text: fields spelled as the unknowns u_i.
  NameTable names() const {
    NameTable n;
    n.time = time_name;
    n.aux = free_name("s");
    n.initial_time = initial_time_name();
    n.space = space_names;
    n.fields = field_names;
    n.params = params;
    return n;
  }

  /// Names used for solutions: fields spelled as their initial data c, c1, ...
  NameTable data_names() const {
    NameTable n = names();
    std::vector<std::string> taken = reserved_names();
    n.fields.clear();
    for (std::size_t k = 0; k < field_count(); ++k) {
      std::string name = field_count() == 1 ? "c" : "c" + std::to_string(k + 1);
      if (std::find(taken.begin(), taken.end(), name) != taken.end()) name = "c" + field_names[k];
      if (std::find(taken.begin(), taken.end(), name) != taken.end())
        throw Error(ErrorKind::ValidationError, "no free name for the initial data of '" +
                                                    field_names[k] + "'");
      taken.push_back(name);
      n.fields.push_back(name);
    }
    n.aux = free_name("s", taken);
    return n;
  }

 private:
  std::string free_name(const std::string& stem, std::vector<std::string> taken = {}) const {
    auto r = reserved_names();
    taken.insert(taken.end(), r.begin(), r.end());
    std::string name = stem;
    for (int i = 1; std::find(taken.begin(), taken.end(), name) != taken.end(); ++i)
      name = stem + std::to_string(i);
    return name;
  }
};

namespace detail {

inline bool is_identifier(const std::string& s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)); });
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw Error(ErrorKind::SchemaError, std::string("'") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string())
      throw Error(ErrorKind::SchemaError, std::string("'") + key + "' entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Validates and parses a JSON problem document.
inline ProblemSpec parse_problem(std::string_view doc, const ParseOptions& opts = {}) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(doc);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, std::string("malformed JSON: ") + e.what(),
                SourceSpan{e.byte > 0 ? e.byte - 1 : 0, e.byte});
  }
  if (!j.is_object()) throw Error(ErrorKind::SchemaError, "document must be a JSON object");
  static const std::set<std::string> allowed{"kind",  "time",   "space",    "fields",
                                             "rhs",   "order",  "params",   "reference"};
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw Error(ErrorKind::SchemaError, "unknown key '" + key + "'");
  for (const char* key : {"kind", "time", "fields", "rhs"})
    if (!j.contains(key)) throw Error(ErrorKind::SchemaError, std::string("missing key '") + key + "'");

  ProblemSpec p;
  if (!j["kind"].is_string()) throw Error(ErrorKind::SchemaError, "'kind' must be a string");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "ode") p.kind = ProblemKind::Ode;
  else if (kind == "system") p.kind = ProblemKind::System;
  else if (kind == "pde") p.kind = ProblemKind::Pde;
  else throw Error(ErrorKind::SchemaError, "unknown kind '" + kind + "'");

  const json& time = j["time"];
  if (!time.is_object()) throw Error(ErrorKind::SchemaError, "'time' must be an object");
  for (const auto& [key, _] : time.items())
    if (key != "name" && key != "initial")
      throw Error(ErrorKind::SchemaError, "unknown key 'time." + key + "'");
  if (!time.contains("name") || !time["name"].is_string())
    throw Error(ErrorKind::SchemaError, "'time.name' must be a string");
  p.time_name = time["name"].get<std::string>();
  if (time.contains("initial")) {
    const json& init = time["initial"];
    if (init.is_string()) p.initial_text = init.get<std::string>();
    else if (init.is_number_integer()) p.initial_text = std::to_string(init.get<long>());
    else if (init.is_number()) p.initial_text = init.dump();
    else throw Error(ErrorKind::SchemaError, "'time.initial' must be a string or number");
  }

  if (j.contains("space")) p.space_names = detail::string_list(j["space"], "space");
  p.field_names = detail::string_list(j["fields"], "fields");
  if (j.contains("params")) p.params = detail::string_list(j["params"], "params");
  if (j.contains("order")) {
    if (!j["order"].is_number_integer() || j["order"].get<long>() < 1)
      throw Error(ErrorKind::SchemaError, "'order' must be a positive integer");
    p.order = static_cast<int>(j["order"].get<long>());
  }
  if (j.contains("reference")) {
    if (!j["reference"].is_string()) throw Error(ErrorKind::SchemaError, "'reference' must be a string");
    p.reference = j["reference"].get<std::string>();
  }

  // names
  if (!detail::is_identifier(p.time_name))
    throw Error(ErrorKind::ValidationError, "invalid time name '" + p.time_name + "'");
  for (const auto& s : p.space_names)
    if (s.size() != 1 || !std::isalpha(static_cast<unsigned char>(s[0])))
      throw Error(ErrorKind::ValidationError, "space variables must be single letters, got '" + s + "'");
  for (const auto& names : {p.field_names, p.params})
    for (const auto& s : names)
      if (!detail::is_identifier(s) || FunctionRegistry::contains(s))
        throw Error(ErrorKind::ValidationError, "invalid name '" + s + "'");
  if (p.field_names.empty()) throw Error(ErrorKind::ValidationError, "at least one field is required");

  // initial time: a lone undeclared identifier is the symbolic initial time
  {
    NameTable n;
    n.time.clear();
    n.aux.clear();
    n.space.clear();
    n.fields.clear();
    n.params = p.params;
    n.initial_time.clear();
    std::string trimmed = p.initial_text;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    trimmed.erase(trimmed.find_last_not_of(" \t") + 1);
    if (detail::is_identifier(trimmed) &&
        std::find(p.params.begin(), p.params.end(), trimmed) == p.params.end() &&
        !FunctionRegistry::contains(trimmed)) {
      p.initial_time = Expr::sym(Symbol::initial_time(trimmed));
    } else {
      try {
        p.initial_time = parse_expression(p.initial_text, n, opts);
      } catch (const Error& e) {
        throw Error(ErrorKind::ValidationError, std::string("time.initial: ") + e.what());
      }
    }
  }

  {
    auto all = p.reserved_names();
    std::set<std::string> unique(all.begin(), all.end());
    if (unique.size() != all.size())
      throw Error(ErrorKind::ValidationError, "time, space, field and parameter names must be distinct");
  }

  if (p.kind == ProblemKind::Ode && p.field_count() != 1)
    throw Error(ErrorKind::ValidationError, "kind 'ode' requires exactly one field");
  if (p.kind != ProblemKind::Pde && !p.space_names.empty())
    throw Error(ErrorKind::ValidationError, "space variables are only allowed for kind 'pde'");
  if (p.kind == ProblemKind::Pde && p.space_names.empty())
    throw Error(ErrorKind::ValidationError, "kind 'pde' requires at least one space variable");

  const json& rhs = j["rhs"];
  if (!rhs.is_object()) throw Error(ErrorKind::SchemaError, "'rhs' must be an object");
  for (const auto& [key, _] : rhs.items())
    if (std::find(p.field_names.begin(), p.field_names.end(), key) == p.field_names.end())
      throw Error(ErrorKind::SchemaError, "rhs for undeclared field '" + key + "'");
  NameTable names = p.names();
  names.aux.clear();
  names.initial_time.clear();
  for (const auto& field : p.field_names) {
    if (!rhs.contains(field)) throw Error(ErrorKind::SchemaError, "missing rhs for field '" + field + "'");
    if (!rhs[field].is_string() && !rhs[field].is_number())
      throw Error(ErrorKind::SchemaError, "rhs of '" + field + "' must be a string");
    std::string text = rhs[field].is_string() ? rhs[field].get<std::string>() : rhs[field].dump();
    try {
      p.rhs.push_back(parse_expression(text, names, opts));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::UnknownIdentifier && p.kind != ProblemKind::Pde &&
          e.span().has_value()) {
        std::string tok = text.substr(e.span()->start, e.span()->end - e.span()->start);
        auto us = tok.find('_');
        if (us != std::string::npos &&
            std::find(p.field_names.begin(), p.field_names.end(), tok.substr(0, us)) !=
                p.field_names.end())
          throw Error(ErrorKind::ValidationError,
                      "rhs of '" + field + "': derivative '" + tok + "' needs kind 'pde'", e.span());
      }
      throw Error(e.kind(), "rhs of '" + field + "': " + e.what(), e.span());
    }
  }
  return p;
}

}  // namespace chronexp
