#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls the orthonormalization, eigen or projection routines under test.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "dod.hpp"

namespace oracle {

using dod::Matrix;
using dod::Vector;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline dod::GramMatrix random_diag_gram(std::size_t n, std::mt19937_64& rng) {
  return dod::GramMatrix::diagonal(random_vector(n, rng, 0.2, 3.0));
}

/// Naive triple loop product.
inline Matrix naive_mul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Matrix naive_t(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// Explicit dense Gram matrix.
inline Matrix dense_of(const dod::GramMatrix& g) {
  Matrix m(g.dim(), g.dim());
  for (std::size_t j = 0; j < g.dim(); ++j) {
    Vector e(g.dim(), 0.0);
    e[j] = 1.0;
    m.set_col(j, g.apply(e));
  }
  return m;
}

/// Solve A X = B by Gauss-Jordan elimination with partial pivoting.
inline Matrix solve(Matrix a, Matrix b) {
  const std::size_t n = a.rows();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (std::abs(a(piv, c)) < 1e-300) throw std::runtime_error("oracle::solve: singular");
    for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(piv, k));
    for (std::size_t k = 0; k < b.cols(); ++k) std::swap(b(c, k), b(piv, k));
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c) / a(c, c);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) a(r, k) -= f * a(c, k);
      for (std::size_t k = 0; k < b.cols(); ++k) b(r, k) -= f * b(c, k);
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < b.cols(); ++k) b(r, k) /= a(r, r);
  return b;
}

/// G-orthogonal projector onto span(W): W (WᵀGW)⁻¹ WᵀG.
inline Matrix normal_eq_projector(const Matrix& w, const Matrix& g) {
  const Matrix wtg = naive_mul(naive_t(w), g);
  return naive_mul(w, solve(naive_mul(wtg, w), wtg));
}

/// V Vᵀ G for a G-orthonormal V.
inline Matrix basis_projector(const Matrix& v, const Matrix& g) { return naive_mul(v, naive_mul(naive_t(v), g)); }

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double g_norm_sq(const Vector& u, const Matrix& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < u.size(); ++j) s += u[i] * g(i, j) * u[j];
  return s;
}

/// Central finite differences of f at x with step h.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, Vector x, double h = 1e-5) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// |a − b| / max(|b|, floor) over the whole vector (2-norms).
inline double rel_error(const Vector& a, const Vector& b, double floor = 1e-12) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

}  // namespace oracle
