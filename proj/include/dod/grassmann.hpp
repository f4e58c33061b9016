#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "dod/linalg.hpp"
#include "dod/sampling.hpp"

namespace dod {

/**
 * Projection 2-norm distance between span(v) and span(w):
 * sqrt(1 − σ_min²) with σ_min the smallest singular value of ṼᵀW̃, where
 * Ṽ, W̃ are Euclidean orthonormalizations of the inputs. Lies in [0, 1].
 *
 * 1 − σ_min² is the largest eigenvalue of RᵀR with R = W̃ − ṼṼᵀW̃, so the
 * distance is evaluated as σ_max(R); this avoids the cancellation in 1 − σ²
 * for nearby subspaces. Bitwise-equal inputs return exactly 0.
 */
inline double grassmann_distance(const Matrix& v, const Matrix& w) {
  detail::require_dims(v.rows() == w.rows() && v.cols() == w.cols(), "grassmann_distance: shape mismatch");
  if (v == w) {
    orth(v);  // still reject rank-deficient input
    return 0.0;
  }
  const Matrix vt = orth(v);
  const Matrix wt = orth(w);
  const Matrix r = wt - matmul(vt, matmul_tn(vt, wt));
  return std::clamp(singular_values(r).front(), 0.0, 1.0);
}

struct AdaptivityReport {
  double score = 0.0;
  std::size_t n_pairs = 0;
  double standard_error = 0.0;  // sample std of d² over the pairs, / sqrt(n_pairs)
};

/**
 * Monte Carlo adaptivity score sqrt(mean d²(Ṽ(μ_{2i−1}), Ṽ(μ_{2i}))).
 *
 * `inner(mu)` returns the N_A × n inner basis, `sampler(rng)` draws μ.
 * Pairs are accumulated in index order so the result is reproducible per seed.
 */
template <class InnerFn, class Sampler>
AdaptivityReport adaptivity_score(InnerFn&& inner, Sampler&& sampler, std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw ConfigError("adaptivity_score: n_pairs must be >= 1");
  Rng rng = make_rng(seed, 0xada9);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const Vector mu1 = sampler(rng);
    const Vector mu2 = sampler(rng);
    const double d = grassmann_distance(inner(mu1), inner(mu2));
    const double d2 = d * d;
    sum += d2;
    sum_sq += d2 * d2;
  }
  const double n = static_cast<double>(n_pairs);
  const double mean = sum / n;
  AdaptivityReport r;
  r.score = std::sqrt(mean);
  r.n_pairs = n_pairs;
  if (n_pairs > 1) {
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    r.standard_error = std::sqrt(var / n);
  }
  return r;
}

/// Pairs needed so that |Adpt − Adpt_MC| <= epsilon with probability 1 − delta:
/// ceil(delta⁻¹ epsilon⁻⁴ / 4).
inline std::size_t required_pairs(double delta, double epsilon) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("required_pairs: delta must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("required_pairs: epsilon must lie in (0, 1]");
  const double raw = 1.0 / (delta * std::pow(epsilon, 4) * 4.0);
  // Guard against 10000.000000000002 style round-off before the ceiling.
  const double nearest = std::round(raw);
  const double value = std::abs(raw - nearest) < 1e-9 * std::max(1.0, raw) ? nearest : std::ceil(raw);
  return static_cast<std::size_t>(std::max(1.0, value));
}

}  // namespace dod
