#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "dod/pod.hpp"
#include "dod/sampling.hpp"

/** @file Analytic parametric problems with exactly two-dimensional μ-slices. */

namespace dod {

enum class ProblemKind { ModalSuperposition, TravelTime };

inline const char* to_string(ProblemKind k) {
  return k == ProblemKind::ModalSuperposition ? "modal_superposition" : "travel_time";
}

inline ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "modal_superposition") return ProblemKind::ModalSuperposition;
  if (s == "travel_time") return ProblemKind::TravelTime;
  throw ConfigError("unknown problem kind '" + s + "'");
}

/// Uniform tensor grid in 1 or 2 dimensions, x varying fastest.
struct GridSpec {
  std::vector<std::size_t> points{256};
  std::vector<std::pair<double, double>> extent{{0.0, 1.0}};

  std::size_t dim() const noexcept { return points.size(); }

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t p : points) n *= p;
    return n;
  }

  void validate() const {
    if (dim() < 1 || dim() > 2 || extent.size() != dim()) throw ConfigError("GridSpec: 1D or 2D grids only");
    if (size() < 16) throw ConfigError("GridSpec: at least 16 grid points are required");
    for (std::size_t d = 0; d < dim(); ++d) {
      if (points[d] < 2) throw ConfigError("GridSpec: at least 2 points per axis");
      if (!(extent[d].first < extent[d].second)) throw ConfigError("GridSpec: empty extent");
    }
  }

  double spacing(std::size_t d) const {
    return (extent[d].second - extent[d].first) / static_cast<double>(points[d] - 1);
  }

  /// Coordinates of grid node `idx`.
  Vector node(std::size_t idx) const {
    Vector x(dim());
    for (std::size_t d = 0; d < dim(); ++d) {
      const std::size_t k = idx % points[d];
      idx /= points[d];
      x[d] = extent[d].first + static_cast<double>(k) * spacing(d);
    }
    return x;
  }

  /// Trapezoidal quadrature weights (tensor product in 2D).
  Vector trapezoid_weights() const {
    Vector w(size(), 1.0);
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
      std::size_t rem = idx;
      for (std::size_t d = 0; d < dim(); ++d) {
        const std::size_t k = rem % points[d];
        rem /= points[d];
        const double h = spacing(d);
        w[idx] *= (k == 0 || k + 1 == points[d]) ? 0.5 * h : h;
      }
    }
    return w;
  }

  /// Length of the shortest axis.
  double width() const {
    double w = extent[0].second - extent[0].first;
    for (std::size_t d = 1; d < dim(); ++d) w = std::min(w, extent[d].second - extent[d].first);
    return w;
  }

  bool operator==(const GridSpec&) const = default;
};

struct SyntheticProblem {
  ProblemKind kind = ProblemKind::ModalSuperposition;
  GridSpec grid;
  ParameterBox theta_box;        // μ
  ParameterBox theta_prime_box;  // ν (always 2-dimensional)
  std::shared_ptr<const GramMatrix> g;

  std::size_t dof() const { return grid.size(); }

  void validate() const {
    grid.validate();
    theta_box.validate();
    theta_prime_box.validate();
    if (theta_prime_box.dim() != 2) throw ConfigError("SyntheticProblem: nu must be 2-dimensional");
    if (theta_box.dim() < 1) throw ConfigError("SyntheticProblem: mu must have at least one component");
    if (kind == ProblemKind::TravelTime && theta_box.dim() != grid.dim())
      throw ConfigError("SyntheticProblem: travel_time needs mu of the grid dimension");
    if (!g || g->dim() != grid.size()) throw ConfigError("SyntheticProblem: Gram matrix does not match the grid");
  }

  bool operator==(const SyntheticProblem& o) const {
    return kind == o.kind && grid == o.grid && theta_box == o.theta_box && theta_prime_box == o.theta_prime_box;
  }
};

/// Problem with default boxes on `grid`; the Gram matrix holds trapezoidal weights.
inline SyntheticProblem make_problem(ProblemKind kind, GridSpec grid) {
  grid.validate();
  SyntheticProblem p;
  p.kind = kind;
  p.grid = std::move(grid);
  if (kind == ProblemKind::ModalSuperposition) {
    p.theta_box.bounds = {{0.0, 1.0}};
    p.theta_prime_box.bounds = {{0.5, 1.5}, {0.5, 1.5}};
  } else {
    for (std::size_t d = 0; d < p.grid.dim(); ++d) {
      const auto [lo, hi] = p.grid.extent[d];
      p.theta_box.bounds.emplace_back(lo + 0.2 * (hi - lo), lo + 0.8 * (hi - lo));
    }
    p.theta_prime_box.bounds = {{0.5, 1.5}, {0.0, 1.0}};
  }
  p.g = std::make_shared<const GramMatrix>(GramMatrix::diagonal(p.grid.trapezoid_weights()));
  p.validate();
  return p;
}

/// Default 1D grid: 256 points on [0, 1].
inline SyntheticProblem make_problem(ProblemKind kind) { return make_problem(kind, GridSpec{}); }

/// Default 2D grid: 48 × 48 points on [0, 1]².
inline SyntheticProblem make_problem_2d(ProblemKind kind) {
  return make_problem(kind, GridSpec{{48, 48}, {{0.0, 1.0}, {0.0, 1.0}}});
}

namespace detail {

/// Gaussian centers moving along circle arcs with angle θ = (π/2) μ₀.
inline std::pair<Vector, Vector> modal_centers(const GridSpec& grid, std::span<const double> mu) {
  const double w = grid.width();
  const double th = 0.5 * std::numbers::pi * mu[0];
  const double th2 = th + 2.0 * std::numbers::pi / 3.0;
  Vector c1(grid.dim()), c2(grid.dim());
  if (grid.dim() == 1) {
    const double lo = grid.extent[0].first;
    c1[0] = lo + w * (0.5 + 0.3 * std::cos(th));
    c2[0] = lo + w * (0.5 + 0.3 * std::cos(th2));
  } else {
    const double cx = 0.5 * (grid.extent[0].first + grid.extent[0].second);
    const double cy = 0.5 * (grid.extent[1].first + grid.extent[1].second);
    c1 = {cx + 0.3 * w * std::cos(th), cy + 0.3 * w * std::sin(th)};
    c2 = {cx + 0.3 * w * std::cos(th2), cy + 0.3 * w * std::sin(th2)};
  }
  return {c1, c2};
}

inline double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

/// u(·; μ, ν) on the grid.
inline Vector evaluate(const SyntheticProblem& p, std::span<const double> mu, std::span<const double> nu) {
  if (!p.theta_box.contains(mu, 1e-12)) throw ConfigError("evaluate: mu outside the parameter box");
  if (!p.theta_prime_box.contains(nu, 1e-12)) throw ConfigError("evaluate: nu outside the parameter box");
  Vector u(p.grid.size());
  if (p.kind == ProblemKind::ModalSuperposition) {
    const auto [c1, c2] = detail::modal_centers(p.grid, mu);
    const double sigma = 0.1 * p.grid.width();
    const double s2 = sigma * sigma;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Vector x = p.grid.node(i);
      u[i] = nu[0] * std::exp(-detail::sq_distance(x, c1) / s2) + nu[1] * std::exp(-detail::sq_distance(x, c2) / s2);
    }
  } else {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Vector x = p.grid.node(i);
      u[i] = nu[0] * std::sqrt(detail::sq_distance(x, mu)) + nu[1];
    }
  }
  return u;
}

/// Snapshots at the given parameter rows.
inline SnapshotSet snapshots_at(const SyntheticProblem& p, const Matrix& mu, const Matrix& nu) {
  detail::require_dims(mu.rows() == nu.rows(), "snapshots_at: mu and nu sample counts differ");
  SnapshotSet s;
  s.mu = mu;
  s.nu = nu;
  s.u = Matrix(p.dof(), mu.rows());
  for (std::size_t i = 0; i < mu.rows(); ++i) s.u.set_col(i, evaluate(p, mu.row_vec(i), nu.row_vec(i)));
  s.g = p.g;
  return s;
}

/// `count` i.i.d. uniform draws of (μ, ν) from `rng`.
inline SnapshotSet sample_snapshots(const SyntheticProblem& p, std::size_t count, Rng& rng) {
  Matrix mu(count, p.theta_box.dim());
  Matrix nu(count, p.theta_prime_box.dim());
  for (std::size_t i = 0; i < count; ++i) {
    const Vector m = p.theta_box.sample(rng);
    const Vector n = p.theta_prime_box.sample(rng);
    for (std::size_t j = 0; j < m.size(); ++j) mu(i, j) = m[j];
    for (std::size_t j = 0; j < n.size(); ++j) nu(i, j) = n[j];
  }
  return snapshots_at(p, mu, nu);
}

struct Dataset {
  SnapshotSet train;
  SnapshotSet test;
};

/// Train and test sets from disjoint RNG streams of `seed`.
inline Dataset sample_dataset(const SyntheticProblem& p, std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  p.validate();
  if (n_train < 1 || n_test < 1) throw ConfigError("sample_dataset: n_train and n_test must be >= 1");
  Rng train_rng = make_rng(seed, 0x7a17);
  Rng test_rng = make_rng(seed, 0x7e57);
  return {sample_snapshots(p, n_train, train_rng), sample_snapshots(p, n_test, test_rng)};
}

/**
 * POD of the μ-slice {u(μ, ν)}: `n_probe` ν draws build the basis, another
 * `n_probe` fresh draws are scored. Entry k − 1 is the MRPE at rank k; ranks
 * beyond the slice's numerical rank reuse the full slice basis.
 */
inline Vector slice_width_estimate(const SyntheticProblem& p, std::span<const double> mu, std::size_t n_probe,
                                   std::size_t n_max, std::uint64_t seed = 0) {
  p.validate();
  if (n_probe < 1 || n_max < 1) throw ConfigError("slice_width_estimate: n_probe and n_max must be >= 1");
  Rng rng = make_rng(seed, 0x511ce);
  const auto draw = [&] {
    Matrix m(n_probe, mu.size());
    Matrix n(n_probe, 2);
    for (std::size_t i = 0; i < n_probe; ++i) {
      for (std::size_t j = 0; j < mu.size(); ++j) m(i, j) = mu[j];
      const Vector v = p.theta_prime_box.sample(rng);
      n(i, 0) = v[0];
      n(i, 1) = v[1];
    }
    return snapshots_at(p, m, n);
  };
  const SnapshotSet fit = draw();
  const SnapshotSet probe = draw();
  const std::size_t rank = std::min(n_max, numerical_rank(fit));
  const AmbientBasis pod = build_ambient(fit, rank);
  Vector out(n_max);
  for (std::size_t k = 1; k <= n_max; ++k) {
    const Matrix v = pod.a.col_block(0, std::min(k, rank));
    out[k - 1] = mrpe(project_stack(v, *p.g, probe.u), probe.u, *p.g);
  }
  return out;
}

}  // namespace dod
