#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "chronexp/errors.hpp"
#include "chronexp/expr.hpp"
#include "chronexp/lie_series.hpp"
#include "chronexp/parser.hpp"

namespace chronexp {

// ---------------------------------------------------------------------------
// Picard-Volterra iteration: the applied opposed-chronological exponent

/// The k-th iterate of u = c - int_a^t F(tau, u(tau)) dtau, stored as
/// coefficients of (t - a)^n.
struct PicardIterate {
  ProblemSpec problem;
  int iterations = 0;
  Expr expansion_point;
  std::vector<std::vector<Expr>> coeffs;
};

namespace detail {

inline void require_polynomial_rhs(const ProblemSpec& p) {
  if (p.kind == ProblemKind::Pde)
    throw Error(ErrorKind::ValidationError, "the Picard oracle covers ode and system problems only");
  for (std::size_t i = 0; i < p.field_count(); ++i) {
    const Expr& f = p.rhs[i];
    bool ok = is_polynomial_in(f, Symbol::time());
    for (std::size_t k = 0; ok && k < p.field_count(); ++k) ok = is_polynomial_in(f, p.data_symbol(k));
    if (!ok)
      throw Error(ErrorKind::NonPolynomialRhs,
                  "rhs of '" + p.field_names[i] + "' is not polynomial in time and fields");
  }
}

}  // namespace detail

/// Runs `iterations` Picard steps with exact polynomial integration. When
/// `truncate_at` is set, every iterate is cut after (t - a)^truncate_at;
/// coefficients up to that order are unaffected.
inline PicardIterate picard_iterate(const ProblemSpec& p, int iterations,
                                    std::optional<int> truncate_at = std::nullopt,
                                    std::size_t term_budget = 1'000'000) {
  detail::require_polynomial_rhs(p);
  if (iterations < 0) throw Error(ErrorKind::ValidationError, "iteration count must be non-negative");
  const Symbol h = Symbol::time();
  const std::size_t n = p.field_count();

  // tau = a + h inside F; integration then runs over h from 0.
  std::vector<Expr> shifted;
  for (const auto& f : p.rhs) shifted.push_back(subst(f, h, normalize(Expr::add({sym(h), p.initial_time}))));

  PicardIterate it{p, 0, p.initial_time, {}};
  for (std::size_t i = 0; i < n; ++i) it.coeffs.push_back({sym(p.data_symbol(i))});

  for (int step = 1; step <= iterations; ++step) {
    Substitution sub;
    for (std::size_t k = 0; k < n; ++k) sub.emplace(p.data_symbol(k), series_polynomial(it.coeffs[k], h));
    std::vector<std::vector<Expr>> next;
    for (std::size_t i = 0; i < n; ++i) {
      auto integrand = polynomial_coefficients(subst(shifted[i], sub), h);
      if (!integrand) throw Error(ErrorKind::NonPolynomialRhs, "integrand left the polynomial ring");
      std::vector<Expr> column{sym(p.data_symbol(i))};
      std::size_t total_terms = 0;
      for (std::size_t m = 0; m < integrand->size(); ++m) {
        if (truncate_at && static_cast<int>(m) + 1 > *truncate_at) break;
        column.push_back(Expr(Rational(-1) / Rational(static_cast<long>(m) + 1)) * (*integrand)[m]);
        total_terms += term_count(column.back());
      }
      if (total_terms > term_budget)
        throw Error(ErrorKind::ExpressionBlowup,
                    "Picard iterate " + std::to_string(step) + " exceeds the term budget");
      while (column.size() > 1 && column.back().is_zero()) column.pop_back();
      next.push_back(std::move(column));
    }
    it.coeffs = std::move(next);
    it.iterations = step;
  }
  return it;
}

/// Coefficient n of a stored column, zero past its end.
inline Expr coefficient(const std::vector<Expr>& column, int n) {
  return static_cast<std::size_t>(n) < column.size() ? column[static_cast<std::size_t>(n)] : Expr(0L);
}

struct EquivalenceReport {
  int order = 0;
  /// equal[i][n]: Picard and Lie coefficient of field i at order n agree.
  std::vector<std::vector<bool>> equal;
  int first_mismatch_order = -1;
  bool passed() const { return first_mismatch_order < 0; }
};

/// Chronological (Picard) form against ordinary-exponent (Lie) form,
/// compared exactly per order n = 0..order.
inline EquivalenceReport chron_equiv_check(const ProblemSpec& p, int order) {
  detail::require_polynomial_rhs(p);
  PicardIterate chron = picard_iterate(p, order, order);
  SeriesSolution lie = solve_series(p, order);
  EquivalenceReport r;
  r.order = order;
  for (std::size_t i = 0; i < p.field_count(); ++i) {
    std::vector<bool> row;
    for (int n = 0; n <= order; ++n) {
      bool eq = coefficient(chron.coeffs[i], n) == coefficient(lie.coeffs[i], n);
      row.push_back(eq);
      if (!eq && (r.first_mismatch_order < 0 || n < r.first_mismatch_order)) r.first_mismatch_order = n;
    }
    r.equal.push_back(std::move(row));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Linear product integrals

using Matrix = Eigen::MatrixXd;

/// Uniform grid a = tau_0 < ... < tau_K = t with a sampler for L(tau).
/// Factors are sampled at the midpoints of the grid cells.
struct MatrixPath {
  int dimension = 1;
  double start = 0.0;
  double end = 1.0;
  int steps = 1;
  std::function<Matrix(double)> sampler;

  static constexpr int kMaxDimension = 16;

  double step() const { return steps > 0 ? (end - start) / steps : 0.0; }
  double midpoint(int k) const { return start + (k + 0.5) * step(); }

  void validate() const {
    if (dimension < 1 || dimension > kMaxDimension)
      throw Error(ErrorKind::ValidationError, "matrix dimension must be in 1..16");
    // zero steps is the empty product E(a) = I
    if (steps == 0 ? end != start : (steps < 0 || !(end > start)))
      throw Error(ErrorKind::ValidationError, "path needs end > start and a positive step count");
    if (!sampler) throw Error(ErrorKind::ValidationError, "path has no sampler");
  }

  Matrix sample(double tau) const {
    Matrix m = sampler(tau);
    if (m.rows() != dimension || m.cols() != dimension)
      throw Error(ErrorKind::ValidationError, "sampler returned a matrix of the wrong shape");
    return m;
  }
};

/// exp(X) by scaling and squaring around a truncated Taylor series.
inline Matrix matrix_exponential(const Matrix& x, double tolerance = 1e-13) {
  const double norm = x.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = x / std::ldexp(1.0, squarings);
  Matrix result = Matrix::Identity(x.rows(), x.cols());
  Matrix term = result;
  for (int k = 1; k < 64; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= tolerance * result.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

/// E = exp(h L(tau_K^mid)) ... exp(h L(tau_1^mid)), later times on the left.
inline Matrix matrix_texp(const MatrixPath& path) {
  path.validate();
  const double h = path.step();
  Matrix e = Matrix::Identity(path.dimension, path.dimension);
  for (int k = 0; k < path.steps; ++k) e = matrix_exponential(h * path.sample(path.midpoint(k))) * e;
  return e;
}

/// E^-1 = exp(-h L(tau_1^mid)) ... exp(-h L(tau_K^mid)), earlier times on the left.
inline Matrix matrix_texp_inverse(const MatrixPath& path) {
  path.validate();
  const double h = path.step();
  Matrix e = Matrix::Identity(path.dimension, path.dimension);
  for (int k = 0; k < path.steps; ++k) e = e * matrix_exponential(-h * path.sample(path.midpoint(k)));
  return e;
}

struct InverseIdentityReport {
  double residual = 0.0;  // max-row-sum norm of E^-1 E - I
};

inline InverseIdentityReport check_inverse_identity(const MatrixPath& path) {
  Matrix prod = matrix_texp_inverse(path) * matrix_texp(path);
  prod -= Matrix::Identity(path.dimension, path.dimension);
  return {prod.cwiseAbs().rowwise().sum().maxCoeff()};
}

/// L(tau) = [[0, 1], [-tau, 0]]: the Airy equation y'' = -tau y as a system.
inline MatrixPath airy_path(double start, double end, int steps) {
  MatrixPath p;
  p.dimension = 2;
  p.start = start;
  p.end = end;
  p.steps = steps;
  p.sampler = [](double tau) {
    Matrix m(2, 2);
    m << 0.0, 1.0, -tau, 0.0;
    return m;
  };
  return p;
}

inline MatrixPath constant_path(Matrix l, double start, double end, int steps) {
  MatrixPath p;
  p.dimension = static_cast<int>(l.rows());
  p.start = start;
  p.end = end;
  p.steps = steps;
  p.sampler = [l = std::move(l)](double) { return l; };
  return p;
}

/// L(tau) = A + tau B + sin(3 tau) C with entries of A, B, C uniform in
/// [-1, 1], drawn from a fixed-seed engine.
inline MatrixPath random_smooth_path(int dimension, std::uint64_t seed, double start, double end, int steps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto draw = [&] {
    Matrix m(dimension, dimension);
    for (int i = 0; i < dimension; ++i)
      for (int j = 0; j < dimension; ++j) m(i, j) = dist(rng);
    return m;
  };
  Matrix a = draw(), b = draw(), c = draw();
  MatrixPath p;
  p.dimension = dimension;
  p.start = start;
  p.end = end;
  p.steps = steps;
  p.sampler = [a, b, c](double tau) -> Matrix { return a + tau * b + std::sin(3.0 * tau) * c; };
  return p;
}

}  // namespace chronexp
