#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronexp/dyson_oracle.hpp"
#include "chronexp/lie_series.hpp"
#include "chronexp/numeric_ref.hpp"
#include "chronexp/parser.hpp"

namespace chronexp {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  /// Residual norm, error or slope, when the check is numeric.
  std::optional<double> metric;
  std::string detail;
  /// Series order at which the check first fails.
  std::optional<int> failing_order;
  /// Not measurable here; counts as passed.
  bool skipped = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  void append(const VerifyReport& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json reports = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
      nlohmann::ordered_json j;
      j["suite"] = c.suite;
      j["name"] = c.name;
      j["passed"] = c.passed;
      if (c.skipped) j["skipped"] = true;
      if (c.metric) j["metric"] = *c.metric;
      if (c.failing_order) j["failing_order"] = *c.failing_order;
      j["detail"] = c.detail;
      reports.push_back(std::move(j));
    }
    return reports;
  }

  std::string to_text() const {
    std::ostringstream os;
    std::size_t failed = 0;
    for (const auto& c : checks) {
      os << (c.skipped ? "SKIP" : c.passed ? "PASS" : "FAIL") << "  " << c.suite << "/" << c.name;
      if (c.metric) os << "  metric=" << std::setprecision(6) << *c.metric;
      if (c.failing_order) os << "  failing_order=" << *c.failing_order;
      if (!c.detail.empty()) os << "  " << c.detail;
      os << "\n";
      failed += c.passed ? 0 : 1;
    }
    os << checks.size() - failed << "/" << checks.size() << " checks passed\n";
    return os.str();
  }
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

/// Runs `body`; any library error becomes a failed check.
template <class Fn>
CheckResult guarded(std::string suite, std::string name, Fn&& body) {
  CheckResult r{std::move(suite), std::move(name), false, std::nullopt, "", std::nullopt};
  try {
    body(r);
  } catch (const Error& e) {
    r.passed = false;
    r.detail = e.what();
  }
  return r;
}

/// Tiny G functions for the homomorphism check of one problem.
inline std::vector<std::pair<std::string, Expr>> homomorphism_seeds(const ProblemSpec& p) {
  std::vector<std::pair<std::string, Expr>> out;
  NameTable names = p.data_names();
  Expr c = sym(p.data_symbol(0));
  const std::string cn = names.fields[0];
  if (p.kind == ProblemKind::Pde) {
    Expr cx = sym(p.data_symbol(0).shifted(0));
    out.emplace_back(cn + "*" + names.name_of(cx.symbol()), c * cx);
  } else {
    out.emplace_back(cn + "^2", pow(c, 2));
    out.emplace_back(cn + "^3", pow(c, 3));
    if (p.field_count() > 1) {
      Expr c2 = sym(p.data_symbol(1));
      out.emplace_back(cn + "*" + names.fields[1], c * c2);
    }
  }
  return out;
}

}  // namespace detail

struct OrderMeasurement {
  double slope = std::numeric_limits<double>::quiet_NaN();
  /// Offsets whose error cleared the noise floor and entered the fit.
  std::size_t points = 0;
};

/// Order-of-accuracy measurement: series error against the reference over
/// t - a in {0.2, 0.1, 0.05, 0.025}. Errors under `noise_floor` are roundoff,
/// not truncation, and are left out of the fit.
inline OrderMeasurement measure_order(const CatalogEntry& entry, int order, double noise_floor = 1e-14) {
  const std::vector<double> offsets{0.2, 0.1, 0.05, 0.025};
  auto sol = solve_series(entry.problem, order);
  auto table = compare_series_to_reference(sol, entry, offsets, entry.points);
  std::vector<double> xs, errs;
  for (const auto& row : table) {
    if (!(row.max_abs_error > noise_floor)) continue;
    xs.push_back(row.offset);
    errs.push_back(row.max_abs_error);
  }
  OrderMeasurement m;
  m.points = xs.size();
  if (m.points >= 2) m.slope = loglog_slope(xs, errs);
  return m;
}

inline double measured_order(const CatalogEntry& entry, int order) { return measure_order(entry, order).slope; }

/// Self-convergence slope of the midpoint product integral on the Airy path
/// over [0, 1]: error of step h measured against step h/2.
inline double product_integral_order() {
  const std::vector<int> steps{10, 20, 50, 100, 200, 500, 1000};
  std::vector<double> hs, errs;
  for (int k : steps) {
    Matrix coarse = matrix_texp(airy_path(0.0, 1.0, k));
    Matrix fine = matrix_texp(airy_path(0.0, 1.0, 2 * k));
    hs.push_back(1.0 / k);
    errs.push_back((coarse - fine).cwiseAbs().maxCoeff());
  }
  return loglog_slope(hs, errs);
}

inline VerifyReport run_catalog_suite(int order) {
  VerifyReport report;
  for (const auto& entry : catalog()) {
    if (entry.reference == ReferenceKind::ClosedForm) {
      report.checks.push_back(detail::guarded("catalog", entry.name + "/exact_solution", [&](CheckResult& r) {
        r.passed = check_exact_solution(entry);
        r.detail = r.passed ? "closed form solves the equation" : "closed form does not solve the equation";
      }));
    }
    report.checks.push_back(detail::guarded("catalog", entry.name + "/residual", [&](CheckResult& r) {
      auto res = defining_residual(solve_series(entry.problem, order));
      r.passed = res.passed();
      if (!r.passed) r.failing_order = res.first_failing_order;
      r.detail = "du/dt + F vanishes through order " + std::to_string(order - 1);
    }));
    report.checks.push_back(detail::guarded("catalog", entry.name + "/taylor", [&](CheckResult& r) {
      auto sol = solve_series(entry.problem, order);
      auto table = compare_series_to_reference(sol, entry, {0.0, 0.01}, entry.points);
      // remainder ~ C (t - a)^(N+1); C stays below 10 for every entry here
      const double bound = 10.0 * std::pow(0.01, order + 1) + 1e-12;
      r.metric = table[1].max_abs_error;
      r.passed = table[0].max_abs_error == 0.0 && table[1].max_abs_error <= bound;
      r.detail = "exact at t = a, error at t - a = 0.01 <= " + detail::format_double(bound);
    }));
    if (entry.reference == ReferenceKind::ClosedForm && order >= 1) {
      report.checks.push_back(detail::guarded("catalog", entry.name + "/order_of_accuracy", [&](CheckResult& r) {
        auto m = measure_order(entry, order);
        if (m.points < 2) {
          r.passed = r.skipped = true;
          r.detail = "truncation error below double resolution at order " + std::to_string(order);
          return;
        }
        r.metric = m.slope;
        r.passed = std::abs(m.slope - (order + 1)) <= 0.4;
        r.detail = "log-log slope expected " + std::to_string(order + 1) + " +- 0.4 over " +
                   std::to_string(m.points) + " offsets";
      }));
    }
  }
  return report;
}

inline VerifyReport run_dyson_suite(int order, std::uint64_t seed = 0) {
  VerifyReport report;
  for (const auto& entry : catalog()) {
    if (!has_polynomial_rhs(entry.problem)) continue;
    report.checks.push_back(detail::guarded("dyson", entry.name + "/chron_equiv", [&](CheckResult& r) {
      auto eq = chron_equiv_check(entry.problem, order);
      r.passed = eq.passed();
      if (!r.passed) r.failing_order = eq.first_mismatch_order;
      r.detail = "Picard and Lie coefficients equal through order " + std::to_string(order);
    }));
  }
  report.checks.push_back(detail::guarded("dyson", "inverse_identity/airy", [&](CheckResult& r) {
    double res = check_inverse_identity(airy_path(0.0, 1.0, 100)).residual;
    r.metric = res;
    r.passed = res <= 1e-11;
    r.detail = "||E^-1 E - I|| <= 1e-11 at h = 1e-2";
  }));
  report.checks.push_back(detail::guarded("dyson", "inverse_identity/random4", [&](CheckResult& r) {
    double res = check_inverse_identity(random_smooth_path(4, seed, 0.0, 1.0, 100)).residual;
    r.metric = res;
    r.passed = res <= 1e-11;
    r.detail = "seed " + std::to_string(seed) + ", ||E^-1 E - I|| <= 1e-11 at h = 1e-2";
  }));
  report.checks.push_back(detail::guarded("dyson", "product_integral_order", [&](CheckResult& r) {
    double slope = product_integral_order();
    r.metric = slope;
    r.passed = std::abs(slope - 2.0) <= 0.3;
    r.detail = "midpoint product integral self-convergence slope 2 +- 0.3";
  }));
  return report;
}

inline VerifyReport run_homomorphism_suite(int order) {
  VerifyReport report;
  for (const auto& entry : catalog()) {
    auto g = build_generator(entry.problem);
    for (const auto& [label, seed] : detail::homomorphism_seeds(entry.problem)) {
      report.checks.push_back(detail::guarded("homomorphism", entry.name + "/" + label, [&](CheckResult& r) {
        auto h = check_homomorphism(g, seed, order);
        r.passed = h.passed();
        if (!r.passed) r.failing_order = h.first_mismatch;
        r.detail = "series of G equals G of series through order " + std::to_string(order);
      }));
    }
  }
  return report;
}

/// Checks for one user problem. With a `reference` entry, the problem's
/// series must also solve that entry's equation and match its reference.
inline VerifyReport run_problem_checks(const ProblemSpec& p, int order) {
  VerifyReport report;
  auto sol = solve_series(p, order);
  report.checks.push_back(detail::guarded("problem", "residual", [&](CheckResult& r) {
    auto res = defining_residual(sol);
    r.passed = res.passed();
    if (!r.passed) r.failing_order = res.first_failing_order;
    r.detail = "series solves its own equation through order " + std::to_string(order - 1);
  }));
  if (has_polynomial_rhs(p)) {
    report.checks.push_back(detail::guarded("problem", "chron_equiv", [&](CheckResult& r) {
      auto eq = chron_equiv_check(p, order);
      r.passed = eq.passed();
      if (!r.passed) r.failing_order = eq.first_mismatch_order;
      r.detail = "Picard and Lie coefficients equal";
    }));
  }
  auto g = build_generator(p);
  for (const auto& [label, seed] : detail::homomorphism_seeds(p)) {
    report.checks.push_back(detail::guarded("problem", "homomorphism/" + label, [&](CheckResult& r) {
      auto h = check_homomorphism(g, seed, std::min(order, 5));
      r.passed = h.passed();
      if (!r.passed) r.failing_order = h.first_mismatch;
    }));
  }
  if (p.reference) {
    report.checks.push_back(detail::guarded("problem", "reference/" + *p.reference, [&](CheckResult& r) {
      CatalogEntry entry = catalog_entry(*p.reference);
      if (entry.problem.field_count() != p.field_count() || entry.problem.kind != p.kind ||
          entry.problem.space_count() != p.space_count()) {
        r.detail = "problem shape differs from the reference entry";
        return;
      }
      auto res = defining_residual(sol, entry.problem);
      r.passed = res.passed();
      if (!r.passed) {
        r.failing_order = res.first_failing_order;
        r.detail = "series does not solve the reference equation";
        return;
      }
      auto table = compare_series_to_reference(sol, entry, {0.01}, entry.points);
      const double bound = 10.0 * std::pow(0.01, order + 1) + 1e-12;
      r.metric = table[0].max_abs_error;
      r.passed = table[0].max_abs_error <= bound;
      r.detail = "matches the reference equation and values";
    }));
  }
  return report;
}

}  // namespace chronexp
