#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chronexp/lie_series.hpp"
#include "chronexp/numeric_ref.hpp"
#include "chronexp/parser.hpp"
#include "chronexp/verify.hpp"

namespace chronexp::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kResourceError = 2,
  kVerificationFailed = 3,
};

inline constexpr int kDefaultOrder = 6;
inline constexpr int kMaxOrderWithoutFlag = 12;

using ordered_json = nlohmann::ordered_json;

/// "(t)" for a = 0, otherwise "(t - a)" / "(t - 1/2)" / "(t + 1)".
inline std::string shift_text(const ProblemSpec& p, const NameTable& names) {
  const Expr& a = p.initial_time;
  if (a.is_zero()) return "(" + p.time_name + ")";
  if (detail::is_negative_term(a)) return "(" + p.time_name + " + " + render(-a, names) + ")";
  std::string r = render(a, names);
  if (a.kind() == ExprKind::Add) r = "(" + r + ")";
  return "(" + p.time_name + " - " + r + ")";
}

/// One field of a series as  c - (t)*c^2 + (t)^2/2*c_xx ...
inline std::string render_series(const std::vector<Expr>& column, const ProblemSpec& p, const NameTable& names) {
  const std::string shift = shift_text(p, names);
  std::string out;
  for (std::size_t n = 0; n < column.size(); ++n) {
    const Expr& c = column[n];
    if (c.is_zero()) continue;
    bool negative = false;
    std::string body;
    if (n == 0) {
      body = render(c, names);
    } else {
      std::string power = n == 1 ? shift : shift + "^" + std::to_string(n);
      if (c.kind() == ExprKind::Add) {
        body = power + "*(" + render(c, names) + ")";
      } else {
        negative = detail::is_negative_term(c);
        Expr mag = negative ? -c : c;
        Rational coef(1);
        Expr rest = mag;
        if (mag.is_const()) {
          coef = mag.value();
          rest = Expr(1L);
        } else if (mag.kind() == ExprKind::Mul && mag.args().front().is_const()) {
          coef = mag.args().front().value();
          rest = mag / Expr(coef);
        }
        std::string num = coef.numerator().get_str();
        body = (num == "1" ? "" : num + "*") + power;
        if (coef.denominator() != 1) body += "/" + coef.denominator().get_str();
        if (!rest.is_one()) body += "*" + render(rest, names);
      }
    }
    if (out.empty()) {
      out = (negative ? "-" : "") + body;
    } else {
      out += (negative ? " - " : " + ") + body;
    }
  }
  return out.empty() ? "0" : out;
}

inline ordered_json problem_json(const ProblemSpec& p, int order) {
  ordered_json j;
  j["kind"] = to_string(p.kind);
  j["time"] = {{"name", p.time_name}, {"initial", render(p.initial_time, p.names())}};
  if (!p.space_names.empty()) j["space"] = p.space_names;
  j["fields"] = p.field_names;
  ordered_json rhs = ordered_json::object();
  for (std::size_t i = 0; i < p.field_count(); ++i) rhs[p.field_names[i]] = render(p.rhs[i], p.names());
  j["rhs"] = rhs;
  j["order"] = order;
  if (!p.params.empty()) j["params"] = p.params;
  if (p.reference) j["reference"] = *p.reference;
  return j;
}

inline ordered_json coefficients_json(const SeriesSolution& sol) {
  const NameTable names = sol.problem.data_names();
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < sol.coeffs.size(); ++i)
    for (std::size_t n = 0; n < sol.coeffs[i].size(); ++n)
      arr.push_back({{"field", sol.problem.field_names[i]}, {"n", n}, {"expr", render(sol.coeffs[i][n], names)}});
  return arr;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::SchemaError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ProblemSpec load_problem(const std::string& path) { return parse_problem(read_file(path)); }

inline int resolve_order(const ProblemSpec& p, std::optional<int> flag, bool allow_high) {
  int order = flag.value_or(p.order);
  if (order < 0) throw Error(ErrorKind::ValidationError, "order must be non-negative");
  if (order > kMaxOrderWithoutFlag && !allow_high)
    throw Error(ErrorKind::ValidationError,
                "order " + std::to_string(order) + " exceeds 12; pass --allow-high-order to force it");
  return order;
}

inline std::string format_value(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  return s;
}

/// --ic for ode/system: "c=1", "u=1", "c1=1,c2=0"; free parameters and a
/// symbolic initial time may be bound in the same list.
inline Bindings parse_constant_bindings(const ProblemSpec& p, const std::string& text) {
  const NameTable data = p.data_names();
  NameTable constants;
  constants.time.clear();
  constants.aux.clear();
  constants.initial_time.clear();
  constants.space.clear();
  constants.fields.clear();
  Bindings b;
  for (const auto& item : split(text, ',')) {
    if (trim(item).empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::SyntaxError, "expected name=value in --ic, got '" + item + "'");
    std::string name = trim(item.substr(0, eq));
    double value = eval_num(parse_expression(item.substr(eq + 1), constants), {});
    bool bound = false;
    for (std::size_t k = 0; k < p.field_count(); ++k) {
      if (name == data.fields[k] || name == p.field_names[k]) {
        b[p.data_symbol(k)] = value;
        bound = true;
      }
    }
    if (std::find(p.params.begin(), p.params.end(), name) != p.params.end()) {
      b[Symbol::param(name)] = value;
      bound = true;
    }
    if (p.symbolic_initial_time() && name == p.initial_time_name()) {
      b[p.initial_time.symbol()] = value;
      bound = true;
    }
    if (!bound) throw Error(ErrorKind::UnknownIdentifier, "--ic names unknown symbol '" + name + "'");
  }
  return b;
}

/// --ic for pde: "sin(x)" for one field or "u=sin(x);v=cos(x)".
inline std::vector<Expr> parse_initial_functions(const ProblemSpec& p, const std::string& text) {
  NameTable n = p.names();
  n.fields.clear();
  n.aux.clear();
  n.time.clear();
  std::vector<std::optional<Expr>> found(p.field_count());
  if (text.find('=') == std::string::npos) {
    if (p.field_count() != 1) throw Error(ErrorKind::SyntaxError, "--ic needs field=expression for each field");
    found[0] = parse_expression(text, n);
  } else {
    for (const auto& item : split(text, ';')) {
      if (trim(item).empty()) continue;
      auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::SyntaxError, "expected field=expression in --ic");
      std::string name = trim(item.substr(0, eq));
      auto it = std::find(p.field_names.begin(), p.field_names.end(), name);
      if (it == p.field_names.end()) throw Error(ErrorKind::UnknownIdentifier, "--ic names unknown field '" + name + "'");
      found[static_cast<std::size_t>(it - p.field_names.begin())] = parse_expression(item.substr(eq + 1), n);
    }
  }
  std::vector<Expr> out;
  for (std::size_t k = 0; k < found.size(); ++k) {
    if (!found[k]) throw Error(ErrorKind::UnboundSymbol, "no initial function for field '" + p.field_names[k] + "'");
    out.push_back(*found[k]);
  }
  return out;
}

inline std::vector<double> parse_numbers(const std::string& text) {
  NameTable none;
  none.time.clear();
  none.aux.clear();
  none.initial_time.clear();
  none.space.clear();
  none.fields.clear();
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(eval_num(parse_expression(item, none), {}));
  }
  return out;
}

struct SolveOptions {
  std::string spec_path;
  std::size_t term_budget = SeriesOptions{}.term_budget;
  std::optional<int> order;
  std::string format = "text";
  bool allow_high_order = false;
};

struct EvalOptions {
  std::string spec_path;
  std::size_t term_budget = SeriesOptions{}.term_budget;
  std::optional<int> order;
  std::string ic;
  std::string t_values;
  std::string x_values;
  std::string format = "text";
  bool allow_high_order = false;
};

struct VerifyOptions {
  std::size_t term_budget = SeriesOptions{}.term_budget;
  std::optional<std::string> spec_path;
  std::string suite;
  std::optional<int> order;
  std::string format = "text";
  std::uint64_t seed = 0;
  bool allow_high_order = false;
};

inline void report_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what();
  if (e.span()) err << " (at bytes " << e.span()->start << ".." << e.span()->end << ")";
  err << "\n";
}

inline int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::ExpressionBlowup ? kResourceError : kInputError;
}

inline SeriesOptions series_options(std::size_t term_budget) {
  SeriesOptions opts;
  opts.term_budget = term_budget;
  return opts;
}

inline int cmd_solve(const SolveOptions& o, std::ostream& out, std::ostream& err) {
  try {
    ProblemSpec p = load_problem(o.spec_path);
    int order = resolve_order(p, o.order, o.allow_high_order);
    SeriesSolution sol = solve_series(p, order, series_options(o.term_budget));
    const NameTable names = p.data_names();
    if (o.format == "json") {
      ordered_json doc;
      doc["problem"] = problem_json(p, order);
      doc["coefficients"] = coefficients_json(sol);
      ordered_json series = ordered_json::object();
      for (std::size_t i = 0; i < p.field_count(); ++i) series[p.field_names[i]] = render_series(sol.coeffs[i], p, names);
      doc["series"] = series;
      doc["evaluations"] = ordered_json::array();
      doc["reports"] = ordered_json::array();
      out << doc.dump(2) << "\n";
    } else {
      for (std::size_t i = 0; i < p.field_count(); ++i)
        out << p.field_names[i] << " = " << render_series(sol.coeffs[i], p, names) << "\n";
    }
    return kOk;
  } catch (const Error& e) {
    report_error(e, err);
    return exit_code_for(e);
  }
}

inline int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  try {
    ProblemSpec p = load_problem(o.spec_path);
    int order = resolve_order(p, o.order, o.allow_high_order);
    SeriesSolution sol = solve_series(p, order, series_options(o.term_budget));
    std::vector<double> times = parse_numbers(o.t_values);
    if (times.empty()) throw Error(ErrorKind::ValidationError, "--t needs at least one value");

    struct Row {
      double t;
      std::vector<double> x;
      std::vector<double> values;
    };
    std::vector<Row> rows;
    if (p.kind == ProblemKind::Pde) {
      std::vector<Expr> initial = parse_initial_functions(p, o.ic);
      Bindings params = parse_constant_bindings(p, "");
      std::vector<std::vector<double>> points;
      if (p.space_count() == 1) {
        for (double x : parse_numbers(o.x_values)) points.push_back({x});
      } else {
        for (const auto& pt : split(o.x_values, ';'))
          if (!trim(pt).empty()) points.push_back(parse_numbers(pt));
      }
      if (points.empty()) throw Error(ErrorKind::ValidationError, "--x needs at least one point");
      const auto jets = required_jets(sol);
      for (const auto& x : points) {
        if (x.size() != p.space_count()) throw Error(ErrorKind::ValidationError, "--x point has the wrong dimension");
        Bindings b = initial_jet_bindings(p, initial, x, jets);
        for (const auto& [s, v] : params) b[s] = v;
        for (double t : times) rows.push_back({t, x, eval_series(sol, t, b)});
      }
    } else {
      Bindings b = parse_constant_bindings(p, o.ic);
      for (double t : times) rows.push_back({t, {}, eval_series(sol, t, b)});
    }

    if (o.format == "json") {
      ordered_json doc;
      doc["problem"] = problem_json(p, order);
      doc["coefficients"] = coefficients_json(sol);
      ordered_json evals = ordered_json::array();
      for (const auto& r : rows) {
        ordered_json e;
        e["t"] = r.t;
        if (!r.x.empty()) e["x"] = r.x;
        ordered_json values = ordered_json::object();
        for (std::size_t k = 0; k < r.values.size(); ++k) values[p.field_names[k]] = r.values[k];
        e["values"] = values;
        evals.push_back(std::move(e));
      }
      doc["evaluations"] = evals;
      doc["reports"] = ordered_json::array();
      out << doc.dump(2) << "\n";
    } else {
      out << p.time_name;
      for (const auto& s : p.space_names) out << "\t" << s;
      for (const auto& f : p.field_names) out << "\t" << f;
      out << "\n";
      for (const auto& r : rows) {
        out << format_value(r.t);
        for (double x : r.x) out << "\t" << format_value(x);
        for (double v : r.values) out << "\t" << format_value(v);
        out << "\n";
      }
    }
    return kOk;
  } catch (const Error& e) {
    report_error(e, err);
    return exit_code_for(e);
  }
}

inline int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
  try {
    VerifyReport report;
    std::optional<ProblemSpec> p;
    if (o.spec_path) p = load_problem(*o.spec_path);
    std::string suite = o.suite.empty() ? (p ? "" : "all") : o.suite;
    if (!suite.empty() && suite != "all" && suite != "catalog" && suite != "dyson" && suite != "homomorphism")
      throw Error(ErrorKind::ValidationError, "unknown suite '" + suite + "'");
    int order = o.order.value_or(p ? p->order : kDefaultOrder);
    if (order < 1) throw Error(ErrorKind::ValidationError, "verify needs order >= 1");
    if (order > kMaxOrderWithoutFlag && !o.allow_high_order)
      throw Error(ErrorKind::ValidationError, "order exceeds 12; pass --allow-high-order to force it");

    if (p) {
      // surface blowup as exit 2 before the checks turn it into failures
      solve_series(*p, order, series_options(o.term_budget));
      report.append(run_problem_checks(*p, order));
    }
    if (suite == "catalog" || suite == "all") report.append(run_catalog_suite(order));
    if (suite == "dyson" || suite == "all") report.append(run_dyson_suite(order, o.seed));
    if (suite == "homomorphism" || suite == "all") report.append(run_homomorphism_suite(std::min(order, 5)));

    if (o.format == "json") {
      ordered_json doc;
      if (p) doc["problem"] = problem_json(*p, order);
      doc["reports"] = report.to_json();
      doc["passed"] = report.passed();
      out << doc.dump(2) << "\n";
    } else {
      out << report.to_text();
    }
    return report.passed() ? kOk : kVerificationFailed;
  } catch (const Error& e) {
    report_error(e, err);
    return exit_code_for(e);
  }
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"chronexp: operator-series solutions of Cauchy problems u_t + F = 0"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "print the truncated series solution");
  solve_cmd->add_option("spec", solve.spec_path, "problem document (JSON)")->required();
  solve_cmd->add_option("--order,-N", solve.order, "truncation order (default: document order, else 6)");
  solve_cmd->add_option("--format", solve.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  solve_cmd->add_flag("--allow-high-order", solve.allow_high_order, "permit orders above 12");
  solve_cmd->add_option("--term-budget", solve.term_budget, "largest intermediate term count (default 1000000)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate the series numerically");
  eval_cmd->add_option("spec", eval.spec_path, "problem document (JSON)")->required();
  eval_cmd->add_option("--order,-N", eval.order, "truncation order");
  eval_cmd->add_option("--ic", eval.ic, "initial data: c=1,... or an initial function of x")->required();
  eval_cmd->add_option("--t", eval.t_values, "comma-separated times")->required();
  eval_cmd->add_option("--x", eval.x_values, "comma-separated space points (pde)");
  eval_cmd->add_option("--format", eval.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  eval_cmd->add_flag("--allow-high-order", eval.allow_high_order, "permit orders above 12");
  eval_cmd->add_option("--term-budget", eval.term_budget, "largest intermediate term count (default 1000000)");

  VerifyOptions verify;
  std::string verify_spec;
  auto* verify_cmd = app.add_subcommand("verify", "run verification checks; exit 3 on failure");
  verify_cmd->add_option("spec", verify_spec, "problem document to check (optional)");
  verify_cmd->add_option("--suite", verify.suite, "catalog, dyson, homomorphism or all")
      ->check(CLI::IsMember({"catalog", "dyson", "homomorphism", "all"}));
  verify_cmd->add_option("--order,-N", verify.order, "truncation order (default 6)");
  verify_cmd->add_option("--seed", verify.seed, "seed for randomized checks (default 0)");
  verify_cmd->add_option("--format", verify.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  verify_cmd->add_flag("--allow-high-order", verify.allow_high_order, "permit orders above 12");
  verify_cmd->add_option("--term-budget", verify.term_budget, "largest intermediate term count (default 1000000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  if (*solve_cmd) return cmd_solve(solve, out, err);
  if (*eval_cmd) return cmd_eval(eval, out, err);
  if (!verify_spec.empty()) verify.spec_path = verify_spec;
  return cmd_verify(verify, out, err);
}

}  // namespace chronexp::cli
