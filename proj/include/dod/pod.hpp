#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "dod/linalg.hpp"

namespace dod {

/// Paired parameter samples and high-fidelity vectors sharing one Gram matrix.
/// Row i of `mu` / `nu` belongs to column i of `u`.
struct SnapshotSet {
  Matrix mu;  // N_samples × p
  Matrix nu;  // N_samples × p'
  Matrix u;   // N_h × N_samples
  std::shared_ptr<const GramMatrix> g;

  std::size_t count() const noexcept { return u.cols(); }
  std::size_t dof() const noexcept { return u.rows(); }
  std::size_t mu_dim() const noexcept { return mu.cols(); }
  std::size_t nu_dim() const noexcept { return nu.cols(); }

  Vector mu_of(std::size_t i) const { return mu.row_vec(i); }
  Vector nu_of(std::size_t i) const { return nu.row_vec(i); }

  void validate() const {
    detail::require_dims(g != nullptr, "SnapshotSet: missing Gram matrix");
    detail::require_dims(mu.rows() == u.cols() && nu.rows() == u.cols(),
                         "SnapshotSet: sample counts differ between mu, nu and u");
    detail::require_dims(g->dim() == u.rows(), "SnapshotSet: Gram dimension does not match N_h");
  }

  /// Samples at the given indices, in order.
  SnapshotSet subset(std::span<const std::size_t> idx) const {
    SnapshotSet s;
    s.mu = Matrix(idx.size(), mu.cols());
    s.nu = Matrix(idx.size(), nu.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t j = 0; j < mu.cols(); ++j) s.mu(k, j) = mu(idx[k], j);
      for (std::size_t j = 0; j < nu.cols(); ++j) s.nu(k, j) = nu(idx[k], j);
    }
    s.u = u.select_cols(idx);
    s.g = g;
    return s;
  }
};

/// G-orthonormal POD basis of a snapshot set.
struct AmbientBasis {
  Matrix a;  // N_h × N_A
  std::shared_ptr<const GramMatrix> g;
  Vector retained_eigenvalues;
  double discarded_energy = 0.0;

  std::size_t dim() const noexcept { return a.cols(); }
  std::size_t dof() const noexcept { return a.rows(); }
};

/**
 * Generalized POD via the method of snapshots: M = UᵀGU, M = ΞΛΞᵀ,
 * A = U Ξ Λ^{-1/2} truncated to `n_a` modes.
 *
 * Eigenvalues below 1e-14 λ₁ are treated as zero, and a mode may only be
 * retained when λ > 1e-12 λ₁; otherwise RankDeficient is thrown with the
 * index of the first mode that cannot be kept.
 */
inline AmbientBasis build_ambient(const SnapshotSet& snaps, std::size_t n_a) {
  snaps.validate();
  const std::size_t n = snaps.count();
  if (n_a < 1 || n_a > n)
    throw RankDeficient(n_a, "build_ambient: n_a=" + std::to_string(n_a) + " outside [1, " + std::to_string(n) + "]");
  const GramMatrix& g = *snaps.g;

  const Matrix gu = g.apply(snaps.u);
  const SymEig eig = sym_eig(matmul_tn(snaps.u, gu));
  const double lambda1 = eig.values.front();
  if (!(lambda1 > 0.0)) throw RankDeficient(0, "build_ambient: snapshot set is identically zero");

  Vector lambda = eig.values;
  for (double& l : lambda)
    if (l < 1e-14 * lambda1) l = 0.0;
  for (std::size_t i = 0; i < n_a; ++i)
    if (!(lambda[i] > 1e-12 * lambda1))
      throw RankDeficient(i, "build_ambient: requested " + std::to_string(n_a) +
                                 " modes but numerical rank is " + std::to_string(i));

  Matrix xi = eig.vectors.col_block(0, n_a);
  for (std::size_t i = 0; i < n_a; ++i) {
    const double s = 1.0 / std::sqrt(lambda[i]);
    for (double& x : xi.col(i)) x *= s;
  }
  Matrix a = matmul(snaps.u, xi);
  // Round-off in small modes degrades orthonormality; one G-MGS pass restores
  // it without changing the nested spans.
  if (orthonormality_defect(a, g) > 1e-12) a = orth(a, g, OrthMode::GramSchmidt);

  AmbientBasis out;
  out.a = std::move(a);
  out.g = snaps.g;
  out.retained_eigenvalues.assign(lambda.begin(), lambda.begin() + static_cast<std::ptrdiff_t>(n_a));
  for (std::size_t i = n_a; i < n; ++i) out.discarded_energy += lambda[i];
  return out;
}

/// Number of eigenvalues of UᵀGU above 1e-12 λ₁.
inline std::size_t numerical_rank(const SnapshotSet& snaps) {
  snaps.validate();
  const SymEig eig = sym_eig(matmul_tn(snaps.u, snaps.g->apply(snaps.u)));
  if (eig.values.empty() || !(eig.values.front() > 0.0)) return 0;
  std::size_t r = 0;
  while (r < eig.values.size() && eig.values[r] > 1e-12 * eig.values.front()) ++r;
  return r;
}

/// Aᵀ G u
inline Vector ambient_project(const AmbientBasis& a, std::span<const double> u) {
  detail::require_dims(u.size() == a.dof(), "ambient_project: dimension mismatch");
  return matvec_t(a.a, a.g->apply(u));
}

/// A c
inline Vector ambient_lift(const AmbientBasis& a, std::span<const double> c) {
  detail::require_dims(c.size() == a.dim(), "ambient_lift: dimension mismatch");
  return matvec(a.a, c);
}

/// Aᵀ G U for a whole stack.
inline Matrix ambient_project(const AmbientBasis& a, const Matrix& u) {
  detail::require_dims(u.rows() == a.dof(), "ambient_project: dimension mismatch");
  return matmul_tn(a.a, a.g->apply(u));
}

/// V Vᵀ G u for a G-orthonormal V.
inline Vector project_onto(const Matrix& v, const GramMatrix& g, std::span<const double> u) {
  return matvec(v, matvec_t(v, g.apply(u)));
}

/// Mean over columns of ‖u_i − û_i‖ / ‖u_i‖ in the G-norm.
inline double mrpe(const Matrix& reconstructions, const Matrix& truth, const GramMatrix& g) {
  detail::require_dims(reconstructions.rows() == truth.rows() && reconstructions.cols() == truth.cols(),
                       "mrpe: shape mismatch");
  detail::require_dims(truth.cols() > 0, "mrpe: no samples");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.cols(); ++i) {
    const double denom = g_norm(truth.col(i), g);
    if (!(denom > 0.0)) throw DegenerateSample("mrpe: truth column " + std::to_string(i) + " has zero norm");
    acc += g_norm(subtract(truth.col(i), reconstructions.col(i)), g) / denom;
  }
  return acc / static_cast<double>(truth.cols());
}

/// Projection of every column of `u` onto span(v).
inline Matrix project_stack(const Matrix& v, const GramMatrix& g, const Matrix& u) {
  const Matrix coeff = matmul_tn(v, g.apply(u));
  return matmul(v, coeff);
}

/// Σ_i ‖u_i − V Vᵀ G u_i‖² over the stack.
inline double squared_projection_error(const Matrix& v, const GramMatrix& g, const Matrix& u) {
  const Matrix r = u - project_stack(v, g, u);
  double s = 0.0;
  for (std::size_t i = 0; i < r.cols(); ++i) s += g.inner(r.col(i), r.col(i));
  return s;
}

}  // namespace dod
