#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chronexp/errors.hpp"
#include "chronexp/expr.hpp"
#include "chronexp/lie_series.hpp"
#include "chronexp/parser.hpp"

namespace chronexp {

/// Classical RK4 for u' = -F(t, u) from the problem's initial time to t_end.
/// `params` binds free parameters and, if symbolic, the initial time.
inline std::vector<double> rk4_solve(const ProblemSpec& p, std::span<const double> initial, double t_end,
                                     int steps, const Bindings& params = {}) {
  if (p.kind == ProblemKind::Pde) throw Error(ErrorKind::ValidationError, "rk4_solve takes ode or system problems");
  if (steps < 1) throw Error(ErrorKind::ValidationError, "rk4_solve needs at least one step");
  const std::size_t n = p.field_count();
  if (initial.size() != n) throw Error(ErrorKind::ValidationError, "initial data has the wrong length");

  Bindings b = params;
  const double a = eval_num(p.initial_time, b);
  const double h = (t_end - a) / steps;
  auto velocity = [&](double t, const std::vector<double>& u) {
    b[Symbol::time()] = t;
    for (std::size_t k = 0; k < n; ++k) b[p.data_symbol(k)] = u[k];
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = -eval_num(p.rhs[k], b);
    return out;
  };
  auto axpy = [n](const std::vector<double>& u, double s, const std::vector<double>& k) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + s * k[i];
    return out;
  };

  std::vector<double> u(initial.begin(), initial.end());
  for (int step = 0; step < steps; ++step) {
    const double t = a + step * h;
    auto k1 = velocity(t, u);
    auto k2 = velocity(t + h / 2, axpy(u, h / 2, k1));
    auto k3 = velocity(t + h / 2, axpy(u, h / 2, k2));
    auto k4 = velocity(t + h, axpy(u, h, k3));
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      if (!std::isfinite(u[i]))
        throw Error(ErrorKind::NonFiniteValue, "solution left the finite range at t = " + std::to_string(t + h));
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Catalog of reference problems

enum class ReferenceKind { ClosedForm, NumericRk4, Characteristics };

/// One evaluation site: initial constants c_k for ode/system problems, the
/// space point x for pde problems.
struct SamplePoint {
  std::vector<double> values;
};

struct CatalogEntry {
  std::string name;
  ProblemSpec problem;
  ReferenceKind reference = ReferenceKind::ClosedForm;
  /// Closed-form u_k(t, ...) for ClosedForm entries; in the data symbols
  /// c_k (ode/system) or in x (pde, for `initial_functions`).
  std::vector<Expr> exact;
  /// c_k(x) for pde entries.
  std::vector<Expr> initial_functions;
  /// Values for free parameters and a symbolic initial time.
  Bindings params;
  std::vector<SamplePoint> points;
  /// Largest t - a for which the reference is trustworthy.
  double validity = std::numeric_limits<double>::infinity();
  std::string note;

  double initial_time_value() const { return eval_num(problem.initial_time, params); }
};

namespace detail {

struct EntrySource {
  const char* name;
  const char* document;
  ReferenceKind reference;
  std::vector<const char*> exact;
  std::vector<const char*> initial_functions;
  std::vector<std::vector<double>> points;
  double initial_time_value;
  double validity;
  const char* note;
};

inline std::vector<EntrySource> catalog_sources() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {
      {"exponential",
       R"({"kind":"ode","time":{"name":"t","initial":"0"},"fields":["u"],"rhs":{"u":"-u"},"order":6})",
       ReferenceKind::ClosedForm, {"c*exp(t)"}, {}, {{1.0}, {-0.5}, {2.0}}, 0.0, inf, "u' = u"},
      {"riccati",
       R"({"kind":"ode","time":{"name":"t","initial":"0"},"fields":["u"],"rhs":{"u":"u^2"},"order":6})",
       ReferenceKind::ClosedForm, {"c/(1 + c*t)"}, {}, {{1.0}, {0.5}, {-0.5}}, 0.0, 1.0,
       "u' = -u^2, pole at t - a = -1/c"},
      {"explicit_time",
       R"({"kind":"ode","time":{"name":"t","initial":"a"},"fields":["u"],"rhs":{"u":"-t*u"},"order":6})",
       ReferenceKind::ClosedForm, {"c*exp((t^2 - a^2)/2)"}, {}, {{1.0}, {-2.0}}, 0.5, inf,
       "u' = t u with symbolic initial time"},
      {"harmonic",
       R"({"kind":"system","time":{"name":"t","initial":"0"},"fields":["u","v"],"rhs":{"u":"-v","v":"u"},"order":6})",
       ReferenceKind::ClosedForm, {"c1*cos(t) + c2*sin(t)", "c2*cos(t) - c1*sin(t)"}, {},
       {{1.0, 0.0}, {0.0, 1.0}, {0.3, -0.7}}, 0.0, inf, "u' = v, v' = -u"},
      {"lotka_volterra",
       R"({"kind":"system","time":{"name":"t","initial":"0"},"fields":["u","v"],"rhs":{"u":"u*v - u","v":"v - u*v"},"order":6})",
       ReferenceKind::NumericRk4, {}, {}, {{1.5, 0.5}, {0.8, 1.2}}, 0.0, inf,
       "u' = u - u v, v' = u v - v; numeric reference only"},
      {"transport",
       R"({"kind":"pde","time":{"name":"t","initial":"0"},"space":["x"],"fields":["u"],"rhs":{"u":"u_x"},"order":6})",
       ReferenceKind::ClosedForm, {"sin(x - t)"}, {"sin(x)"}, {{0.0}, {0.3}, {1.0}, {1.5707963267948966}, {2.5}},
       0.0, inf, "u_t + u_x = 0"},
      {"heat",
       R"({"kind":"pde","time":{"name":"t","initial":"0"},"space":["x"],"fields":["u"],"rhs":{"u":"-u_xx"},"order":6})",
       ReferenceKind::ClosedForm, {"exp(-t)*sin(x)"}, {"sin(x)"},
       {{0.3}, {0.7}, {1.1}, {1.5707963267948966}, {2.4}}, 0.0, inf, "u_t = u_xx"},
      {"burgers",
       R"({"kind":"pde","time":{"name":"t","initial":"0"},"space":["x"],"fields":["u"],"rhs":{"u":"u*u_x"},"order":6})",
       ReferenceKind::Characteristics, {}, {"sin(x)"}, {{0.0}, {0.3}, {1.0}, {2.0}, {3.0}}, 0.0, 1.0,
       "u_t + u u_x = 0, characteristics valid for t - a < 1/max|c'|"},
  };
}

inline NameTable exact_names(const ProblemSpec& p) {
  NameTable n = p.data_names();
  if (n.initial_time.empty()) n.initial_time = "a";
  return n;
}

}  // namespace detail

inline CatalogEntry make_catalog_entry(const detail::EntrySource& src) {
  CatalogEntry e;
  e.name = src.name;
  e.problem = parse_problem(src.document);
  e.reference = src.reference;
  NameTable names = detail::exact_names(e.problem);
  for (const char* text : src.exact) e.exact.push_back(parse_expression(text, names));
  for (const char* text : src.initial_functions) e.initial_functions.push_back(parse_expression(text, names));
  if (e.problem.symbolic_initial_time()) e.params[e.problem.initial_time.symbol()] = src.initial_time_value;
  for (const auto& pt : src.points) e.points.push_back({pt});
  e.validity = src.validity;
  e.note = src.note;
  return e;
}

inline std::vector<CatalogEntry> catalog() {
  std::vector<CatalogEntry> out;
  for (const auto& src : detail::catalog_sources()) out.push_back(make_catalog_entry(src));
  return out;
}

inline CatalogEntry catalog_entry(const std::string& name) {
  for (const auto& src : detail::catalog_sources())
    if (name == src.name) return make_catalog_entry(src);
  throw Error(ErrorKind::ValidationError, "no catalog entry named '" + name + "'");
}

inline bool has_polynomial_rhs(const ProblemSpec& p) {
  if (p.kind == ProblemKind::Pde) return false;
  for (const auto& f : p.rhs) {
    if (!is_polynomial_in(f, Symbol::time())) return false;
    for (std::size_t k = 0; k < p.field_count(); ++k)
      if (!is_polynomial_in(f, p.data_symbol(k))) return false;
  }
  return true;
}

/// Symbolic check that a closed-form entry solves its own problem:
/// du_k/dt + F_k(t, x, u, D^alpha u) normalizes to 0 and u_k(a) = c_k.
inline bool check_exact_solution(const CatalogEntry& entry) {
  if (entry.reference != ReferenceKind::ClosedForm) return true;
  const ProblemSpec& p = entry.problem;
  const bool pde = p.kind == ProblemKind::Pde;
  Substitution sub;
  for (const auto& f : p.rhs) {
    for (const auto& s : free_symbols(f)) {
      if (!s.is(SymbolClass::Jet) || sub.contains(s)) continue;
      Expr d = entry.exact.at(static_cast<std::size_t>(s.index()));
      for (std::size_t j = 0; j < s.alpha().size(); ++j)
        for (int r = 0; r < s.alpha()[j]; ++r) d = diff(d, Symbol::space(static_cast<int>(j)));
      sub.emplace(s, d);
    }
  }
  for (std::size_t k = 0; k < p.field_count(); ++k) {
    Expr residual = diff(entry.exact[k], Symbol::time()) + subst(p.rhs[k], sub);
    if (!residual.is_zero()) return false;
    Expr at_start = subst(entry.exact[k], Symbol::time(), p.initial_time);
    Expr expected = pde ? entry.initial_functions.at(k) : sym(p.data_symbol(k));
    if (!(at_start == expected)) return false;
  }
  return true;
}

/// Pointwise Burgers value from u = c(x - (t - a) u) by fixed-point iteration.
inline double burgers_characteristic(const Expr& initial, double x, double offset, double tolerance = 1e-14) {
  Bindings b{{Symbol::space(0), x}};
  double u = eval_num(initial, b);
  for (int i = 0; i < 100000; ++i) {
    b[Symbol::space(0)] = x - offset * u;
    double next = eval_num(initial, b);
    if (std::abs(next - u) <= tolerance) return next;
    u = next;
  }
  throw Error(ErrorKind::NonFiniteValue, "characteristic iteration did not converge");
}

/// Reference values of every field at t = a + offset.
inline std::vector<double> reference_values(const CatalogEntry& entry, const SamplePoint& point, double offset) {
  const ProblemSpec& p = entry.problem;
  const double a = entry.initial_time_value();
  switch (entry.reference) {
    case ReferenceKind::ClosedForm: {
      Bindings b = entry.params;
      b[Symbol::time()] = a + offset;
      if (p.kind == ProblemKind::Pde) {
        for (std::size_t j = 0; j < point.values.size(); ++j) b[Symbol::space(static_cast<int>(j))] = point.values[j];
      } else {
        for (std::size_t k = 0; k < p.field_count(); ++k) b[p.data_symbol(k)] = point.values.at(k);
      }
      std::vector<double> out;
      for (const auto& u : entry.exact) out.push_back(eval_num(u, b));
      return out;
    }
    case ReferenceKind::NumericRk4:
      if (offset == 0.0) return point.values;
      return rk4_solve(p, point.values, a + offset, 2000, entry.params);
    case ReferenceKind::Characteristics:
      return {burgers_characteristic(entry.initial_functions.at(0), point.values.at(0), offset)};
  }
  return {};
}

/// Values of the truncated series at t = a + offset for one sample point.
inline std::vector<double> series_values(const SeriesSolution& sol, const CatalogEntry& entry,
                                         const SamplePoint& point, double offset) {
  const ProblemSpec& p = entry.problem;
  Bindings b;
  if (p.kind == ProblemKind::Pde) {
    b = initial_jet_bindings(p, entry.initial_functions, point.values, required_jets(sol));
  } else {
    for (std::size_t k = 0; k < p.field_count(); ++k) b[p.data_symbol(k)] = point.values.at(k);
  }
  for (const auto& [s, v] : entry.params) b[s] = v;
  return eval_series(sol, entry.initial_time_value() + offset, b);
}

struct ErrorRow {
  double offset = 0.0;
  double max_abs_error = 0.0;
};

/// Max absolute series error over all points and fields, per t - a offset.
inline std::vector<ErrorRow> compare_series_to_reference(const SeriesSolution& sol, const CatalogEntry& entry,
                                                         const std::vector<double>& offsets,
                                                         const std::vector<SamplePoint>& points) {
  std::vector<ErrorRow> table;
  for (double h : offsets) {
    ErrorRow row{h, 0.0};
    for (const auto& pt : points) {
      auto s = series_values(sol, entry, pt, h);
      auto r = reference_values(entry, pt, h);
      for (std::size_t k = 0; k < s.size(); ++k) row.max_abs_error = std::max(row.max_abs_error, std::abs(s[k] - r[k]));
    }
    table.push_back(row);
  }
  return table;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace chronexp
