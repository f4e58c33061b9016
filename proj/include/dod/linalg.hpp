#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dod/error.hpp"

/** @file Dense linear algebra under an arbitrary SPD inner product.

    Everything here is a pure function of its inputs. Matrices are stored
    column-major since the dominant objects (snapshot stacks, bases) are
    tall and skinny and are accessed a column at a time.
 */

namespace dod {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require_dims(data_.size() == rows_ * cols_, "Matrix: data length != rows*cols");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  /// Build from a row-wise literal, e.g. {{1, 2}, {3, 4}}.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      detail::require_dims(row.size() == c, "Matrix::from_rows: ragged rows");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  static Matrix from_columns(const std::vector<Vector>& columns) {
    if (columns.empty()) return {};
    Matrix m(columns.front().size(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) m.set_col(j, columns[j]);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  Vector col_vec(std::size_t j) const { return {data_.begin() + j * rows_, data_.begin() + (j + 1) * rows_}; }
  Vector row_vec(std::size_t i) const {
    Vector r(cols_);
    for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
    return r;
  }

  void set_col(std::size_t j, std::span<const double> v) {
    detail::require_dims(v.size() == rows_, "Matrix::set_col: length mismatch");
    std::copy(v.begin(), v.end(), data_.begin() + j * rows_);
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  /// Columns [first, first + count).
  Matrix col_block(std::size_t first, std::size_t count) const {
    detail::require_dims(first + count <= cols_, "Matrix::col_block: out of range");
    return Matrix(rows_, count,
                  std::vector<double>(data_.begin() + first * rows_, data_.begin() + (first + count) * rows_));
  }

  /// Selected columns, in the given order.
  Matrix select_cols(std::span<const std::size_t> idx) const {
    Matrix m(rows_, idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) m.set_col(k, col(idx[k]));
    return m;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Small vector / matrix kernels
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_dims(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::require_dims(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  detail::require_dims(a.size() == b.size(), "subtract: length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline double frobenius_norm(const Matrix& m) { return norm2(m.data()); }

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  detail::require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "Matrix subtraction: shape mismatch");
  Matrix r(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) r.data()[k] = a.data()[k] - b.data()[k];
  return r;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  detail::require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "Matrix addition: shape mismatch");
  Matrix r(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) r.data()[k] = a.data()[k] + b.data()[k];
  return r;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix r = a;
  for (double& v : r.data()) v *= s;
  return r;
}

/// a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::require_dims(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj != 0.0) axpy(bkj, a.col(k), cj);
    }
  }
  return c;
}

/// aᵀ * b
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  detail::require_dims(a.rows() == b.rows(), "matmul_tn: row mismatch");
  Matrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) c(i, j) = dot(a.col(i), b.col(j));
  return c;
}

/// a * x
inline Vector matvec(const Matrix& a, std::span<const double> x) {
  detail::require_dims(a.cols() == x.size(), "matvec: length mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t k = 0; k < a.cols(); ++k)
    if (x[k] != 0.0) axpy(x[k], a.col(k), y);
  return y;
}

/// aᵀ * x
inline Vector matvec_t(const Matrix& a, std::span<const double> x) {
  detail::require_dims(a.rows() == x.size(), "matvec_t: length mismatch");
  Vector y(a.cols());
  for (std::size_t k = 0; k < a.cols(); ++k) y[k] = dot(a.col(k), x);
  return y;
}

// ---------------------------------------------------------------------------
// Gram matrix
// ---------------------------------------------------------------------------

/// SPD weight defining ⟨u, v⟩ = uᵀ G v on the high-fidelity space.
class GramMatrix {
 public:
  enum class Kind { Identity, Diagonal, Dense };

  GramMatrix() = default;

  static GramMatrix identity(std::size_t dim) {
    GramMatrix g;
    g.kind_ = Kind::Identity;
    g.dim_ = dim;
    return g;
  }

  static GramMatrix diagonal(Vector weights) {
    for (double w : weights)
      if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorKind::Numerical, "GramMatrix: diagonal weights must be positive");
    GramMatrix g;
    g.kind_ = Kind::Diagonal;
    g.dim_ = weights.size();
    g.weights_ = std::move(weights);
    return g;
  }

  /// Verifies symmetry and positive definiteness (Cholesky) before accepting.
  static GramMatrix dense(Matrix m) {
    detail::require_dims(m.rows() == m.cols(), "GramMatrix: dense matrix must be square");
    const std::size_t n = m.rows();
    const double scale = std::max(frobenius_norm(m), 1e-300);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = j + 1; i < n; ++i)
        if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) throw NonSymmetric("GramMatrix: dense matrix is not symmetric");
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      double d = m(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (!(d > 0.0)) throw Error(ErrorKind::Numerical, "GramMatrix: dense matrix is not positive definite");
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
    GramMatrix g;
    g.kind_ = Kind::Dense;
    g.dim_ = n;
    g.dense_ = std::move(m);
    return g;
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const Vector& weights() const noexcept { return weights_; }
  const Matrix& dense_matrix() const noexcept { return dense_; }

  /// G u
  Vector apply(std::span<const double> u) const {
    detail::require_dims(u.size() == dim_, "GramMatrix::apply: dimension mismatch");
    switch (kind_) {
      case Kind::Identity:
        return Vector(u.begin(), u.end());
      case Kind::Diagonal: {
        Vector r(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) r[i] = weights_[i] * u[i];
        return r;
      }
      case Kind::Dense:
        return matvec(dense_, u);
    }
    return {};
  }

  /// G M, column by column.
  Matrix apply(const Matrix& m) const {
    detail::require_dims(m.rows() == dim_, "GramMatrix::apply: dimension mismatch");
    Matrix r(m.rows(), m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) r.set_col(j, apply(m.col(j)));
    return r;
  }

  double inner(std::span<const double> u, std::span<const double> v) const {
    detail::require_dims(u.size() == dim_ && v.size() == dim_, "g_inner: dimension mismatch");
    switch (kind_) {
      case Kind::Identity:
        return dot(u, v);
      case Kind::Diagonal: {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * weights_[i] * v[i];
        return s;
      }
      case Kind::Dense:
        return dot(u, matvec(dense_, v));
    }
    return 0.0;
  }

  bool operator==(const GramMatrix&) const = default;

 private:
  Kind kind_ = Kind::Identity;
  std::size_t dim_ = 0;
  Vector weights_;
  Matrix dense_;
};

inline double g_inner(std::span<const double> u, std::span<const double> v, const GramMatrix& g) {
  return g.inner(u, v);
}

inline double g_norm(std::span<const double> u, const GramMatrix& g) {
  return std::sqrt(std::max(g.inner(u, u), 0.0));
}

/// ‖Vᵀ G V − I‖_F, the usual orthonormality defect.
inline double orthonormality_defect(const Matrix& v, const GramMatrix& g) {
  Matrix m = matmul_tn(v, g.apply(v));
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) -= 1.0;
  return frobenius_norm(m);
}

// ---------------------------------------------------------------------------
// Orthonormalization
// ---------------------------------------------------------------------------

enum class OrthMode { GramSchmidt, HouseholderQR };

inline const char* to_string(OrthMode m) { return m == OrthMode::GramSchmidt ? "gram_schmidt" : "householder_qr"; }

inline OrthMode orth_mode_from_string(const std::string& s) {
  if (s == "gram_schmidt" || s == "gs") return OrthMode::GramSchmidt;
  if (s == "householder_qr" || s == "qr") return OrthMode::HouseholderQR;
  throw ConfigError("unknown orth mode '" + s + "'");
}

namespace detail {

// A column is dependent when its projected norm drops below this fraction
// of (its original norm + 1).
inline constexpr double kRankTolerance = 1e-12;

inline Matrix orth_mgs(const Matrix& w, const GramMatrix& g) {
  const std::size_t n = w.cols();
  Matrix q(w.rows(), n);
  Matrix gq(w.rows(), n);  // G q_k, cached
  for (std::size_t j = 0; j < n; ++j) {
    Vector v = w.col_vec(j);
    const double pre = g_norm(v, g);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) axpy(-dot(gq.col(k), v), q.col(k), v);
    const double post = g_norm(v, g);
    if (post < kRankTolerance * (pre + 1.0))
      throw RankDeficient(j, "orth: column " + std::to_string(j) + " is linearly dependent");
    for (double& x : v) x /= post;
    q.set_col(j, v);
    gq.set_col(j, g.apply(v));
  }
  return q;
}

inline Matrix orth_householder(const Matrix& w) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  Matrix a = w;
  std::vector<Vector> reflectors(n);
  Vector diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pre = norm2(w.col(k));
    double sigma = 0.0;
    for (std::size_t i = k; i < m; ++i) sigma += a(i, k) * a(i, k);
    const double alpha_abs = std::sqrt(sigma);
    if (alpha_abs < kRankTolerance * (pre + 1.0))
      throw RankDeficient(k, "orth: column " + std::to_string(k) + " is linearly dependent");
    const double alpha = a(k, k) > 0.0 ? -alpha_abs : alpha_abs;
    Vector v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = a(i, k);
    v[0] -= alpha;
    const double vn = norm2(v);
    if (vn > 0.0)
      for (double& x : v) x /= vn;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i - k] * a(i, j);
      for (std::size_t i = k; i < m; ++i) a(i, j) -= 2.0 * s * v[i - k];
    }
    diag[k] = alpha;
    reflectors[k] = std::move(v);
  }
  // Q = H_1 ... H_n [I_n; 0]
  Matrix q(m, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t kk = n; kk-- > 0;) {
    const Vector& v = reflectors[kk];
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = kk; i < m; ++i) s += v[i - kk] * q(i, j);
      for (std::size_t i = kk; i < m; ++i) q(i, j) -= 2.0 * s * v[i - kk];
    }
  }
  // Positive diagonal of R, so both modes agree column by column in exact arithmetic.
  for (std::size_t j = 0; j < n; ++j)
    if (diag[j] < 0.0)
      for (double& x : q.col(j)) x = -x;
  return q;
}

}  // namespace detail

/**
 * Orthonormalize the columns of `w` with respect to `g`, preserving their span.
 *
 * GramSchmidt is modified Gram-Schmidt with one reorthogonalization pass and
 * accepts any Gram matrix. HouseholderQR is a reduced QR and only supports the
 * Euclidean inner product. Throws RankDeficient carrying the offending column.
 */
inline Matrix orth(const Matrix& w, const GramMatrix& g, OrthMode mode = OrthMode::GramSchmidt) {
  detail::require_dims(g.dim() == w.rows(), "orth: Gram dimension does not match rows");
  detail::require_dims(w.cols() <= w.rows(), "orth: more columns than rows");
  if (mode == OrthMode::HouseholderQR) {
    if (g.kind() != GramMatrix::Kind::Identity)
      throw ConfigError("orth: Householder QR supports the identity Gram matrix only");
    return detail::orth_householder(w);
  }
  return detail::orth_mgs(w, g);
}

inline Matrix orth(const Matrix& w, OrthMode mode = OrthMode::GramSchmidt) {
  return orth(w, GramMatrix::identity(w.rows()), mode);
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem and singular values
// ---------------------------------------------------------------------------

struct SymEig {
  Vector values;  // descending
  Matrix vectors; // column i pairs with values[i]
};

/**
 * Cyclic Jacobi eigensolver. The input is symmetrized first; a relative
 * asymmetry above 1e-10 is rejected. Sweeps stop once the off-diagonal
 * Frobenius mass falls below 1e-12 ‖m‖_F (at most 100 sweeps).
 */
inline SymEig sym_eig(const Matrix& m) {
  detail::require_dims(m.rows() == m.cols(), "sym_eig: matrix must be square");
  const std::size_t n = m.rows();
  const double mnorm = frobenius_norm(m);
  Matrix a(n, n);
  double asym = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double d = m(i, j) - m(j, i);
      asym += d * d;
      a(i, j) = 0.5 * (m(i, j) + m(j, i));
    }
  if (std::sqrt(asym) > 1e-10 * mnorm) throw NonSymmetric("sym_eig: input is not symmetric");

  Matrix v = Matrix::identity(n);
  const double target = 1e-12 * mnorm;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i)
        if (i != j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= target) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        if (std::abs(apq) < 1e-300 ||
            (std::abs(app) + 1e3 * std::abs(apq) == std::abs(app) &&
             std::abs(aqq) + 1e3 * std::abs(apq) == std::abs(aqq))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- A J
        {
          auto cp = a.col(p);
          auto cq = a.col(q);
          for (std::size_t k = 0; k < n; ++k) {
            const double x = cp[k], y = cq[k];
            cp[k] = c * x - s * y;
            cq[k] = s * x + c * y;
          }
        }
        // A <- Jᵀ A
        for (std::size_t k = 0; k < n; ++k) {
          const double x = a(p, k), y = a(q, k);
          a(p, k) = c * x - s * y;
          a(q, k) = s * x + c * y;
        }
        a(p, q) = a(q, p) = 0.0;
        auto vp = v.col(p);
        auto vq = v.col(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k], y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SymEig out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.set_col(k, v.col(order[k]));
  }
  return out;
}

/// Singular values in descending order (min(rows, cols) of them) by
/// one-sided Jacobi rotations on the columns, so small values keep full
/// accuracy relative to σ₁ instead of the sqrt(eps) floor of a Gram product.
inline Vector singular_values(const Matrix& m) {
  Matrix a = m.rows() >= m.cols() ? m : m.transposed();
  const std::size_t n = a.cols();
  constexpr double tol = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto cp = a.col(p);
        auto cq = a.col(q);
        const double alpha = dot(cp, cp), beta = dot(cq, cq), gamma = dot(cp, cq);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < cp.size(); ++k) {
          const double x = cp[k], y = cq[k];
          cp[k] = c * x - s * y;
          cq[k] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  Vector s(n);
  for (std::size_t j = 0; j < n; ++j) s[j] = norm2(a.col(j));
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

}  // namespace dod
