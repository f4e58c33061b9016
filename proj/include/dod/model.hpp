#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dod/nets.hpp"
#include "dod/pod.hpp"
#include "dod/training.hpp"

/** @file Deep Orthogonal Decomposition model.

    μ ↦ V_μ = A · ORTH([R₁(s(μ)), …, R_n(s(μ))]), where A is a G-orthonormal
    ambient basis, s the seed network and R_k the root networks. The inner
    module (everything but A) is Euclidean-orthonormal in ℝ^{N_A}, hence
    V_μ is G-orthonormal.
 */

namespace dod {

/// Shapes of the seed and root networks.
struct DodArch {
  std::string name = "custom";
  bool seed_feature_rotsym = false;  // non-learnable [θ, …] ↦ [cos 4θ, sin 4θ, …] in front of the seed
  std::vector<std::size_t> seed_hidden;
  std::size_t latent = 50;  // seed output width l
  std::vector<std::size_t> root_hidden;
  double slope = 0.1;
};

struct DodModel {
  AmbientBasis ambient;
  nn::DenseNet seed;
  std::vector<nn::DenseNet> roots;
  OrthMode orth_mode = OrthMode::HouseholderQR;

  std::size_t n() const noexcept { return roots.size(); }
  std::size_t mu_dim() const noexcept { return seed.input_dim(); }
  std::size_t ambient_dim() const noexcept { return ambient.dim(); }

  std::size_t param_count() const {
    std::size_t c = seed.param_count();
    for (const auto& r : roots) c += r.param_count();
    return c;
  }

  std::vector<nn::DenseNet*> nets() {
    std::vector<nn::DenseNet*> out{&seed};
    for (auto& r : roots) out.push_back(&r);
    return out;
  }

  void validate() const {
    detail::require_dims(!roots.empty(), "DodModel: at least one root is required");
    detail::require_dims(roots.size() <= ambient.dim(), "DodModel: n must not exceed N_A");
    for (const auto& r : roots) {
      detail::require_dims(r.input_dim() == seed.output_dim(), "DodModel: root input differs from seed output");
      detail::require_dims(r.output_dim() == ambient.dim(), "DodModel: root output differs from N_A");
    }
  }
};

/// Seed p → … → l (leaky ReLU at every layer, terminal included), roots
/// l → … → N_A (linear output), weights drawn from `seed`.
inline DodModel make_dod(AmbientBasis ambient, std::size_t mu_dim, std::size_t n, const DodArch& arch,
                         std::uint64_t seed) {
  if (n < 1 || n > ambient.dim()) throw ConfigError("make_dod: need 1 <= n <= N_A");
  DodModel m;
  m.ambient = std::move(ambient);
  m.seed = nn::DenseNet(mu_dim);
  if (arch.seed_feature_rotsym) m.seed.feature(nn::FeatureMap::RotSym);
  for (std::size_t h : arch.seed_hidden) m.seed.dense(h).leaky_relu(arch.slope);
  m.seed.dense(arch.latent).leaky_relu(arch.slope);
  Rng rng = make_rng(seed, 0x5eed);
  m.seed.init_uniform(rng);
  for (std::size_t k = 0; k < n; ++k) {
    nn::DenseNet r = nn::DenseNet::mlp(arch.latent, arch.root_hidden, m.ambient.dim(), false, arch.slope);
    r.init_uniform(rng);
    m.roots.push_back(std::move(r));
  }
  m.validate();
  return m;
}

/// Pre-ORTH stack [R₁(s(μ)), …, R_n(s(μ))], N_A × n.
inline Matrix eval_stack(const DodModel& model, std::span<const double> mu) {
  const Vector s = model.seed.forward(mu);
  Matrix w(model.ambient_dim(), model.n());
  for (std::size_t k = 0; k < model.n(); ++k) w.set_col(k, model.roots[k].forward(s));
  return w;
}

/// Inner module Ṽ_μ (N_A × n, Euclidean-orthonormal).
inline Matrix eval_inner(const DodModel& model, std::span<const double> mu, OrthMode mode) {
  return orth(eval_stack(model, mu), mode);
}

inline Matrix eval_inner(const DodModel& model, std::span<const double> mu) {
  return eval_inner(model, mu, model.orth_mode);
}

/// V_μ = A Ṽ_μ (N_h × n, G-orthonormal).
inline Matrix eval_basis(const DodModel& model, std::span<const double> mu, OrthMode mode) {
  return matmul(model.ambient.a, eval_inner(model, mu, mode));
}

inline Matrix eval_basis(const DodModel& model, std::span<const double> mu) {
  return eval_basis(model, mu, model.orth_mode);
}

struct Projection {
  Vector coefficients;     // c = V_μᵀ G u
  Vector reconstruction;   // V_μ c
};

inline Projection dod_project(const DodModel& model, std::span<const double> mu, std::span<const double> u,
                              OrthMode mode) {
  detail::require_dims(u.size() == model.ambient.dof(), "dod_project: u has the wrong length");
  const Matrix inner = eval_inner(model, mu, mode);
  const Vector ut = ambient_project(model.ambient, u);
  Projection p;
  p.coefficients = matvec_t(inner, ut);
  p.reconstruction = ambient_lift(model.ambient, matvec(inner, p.coefficients));
  return p;
}

inline Projection dod_project(const DodModel& model, std::span<const double> mu, std::span<const double> u) {
  return dod_project(model, mu, u, model.orth_mode);
}

/// (1/N) Σ ‖u_i − V V ᵀG u_i‖² on full vectors.
inline double loss_full(const DodModel& model, const SnapshotSet& snaps) {
  snaps.validate();
  detail::require_dims(snaps.count() > 0, "loss_full: empty snapshot set");
  double s = 0.0;
  for (std::size_t i = 0; i < snaps.count(); ++i) {
    const Projection p = dod_project(model, snaps.mu_of(i), snaps.u.col(i));
    const Vector r = subtract(snaps.u.col(i), p.reconstruction);
    s += snaps.g->inner(r, r);
  }
  return s / static_cast<double>(snaps.count());
}

/// (1/N) Σ |ũ_i − Ṽ Ṽᵀ ũ_i|² with ũ_i = AᵀG u_i precomputed.
inline double loss_ambient(const DodModel& model, const Matrix& mu, const Matrix& ambient_coords) {
  detail::require_dims(mu.rows() == ambient_coords.cols(), "loss_ambient: sample count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < ambient_coords.cols(); ++i) {
    const Matrix inner = eval_inner(model, mu.row_vec(i));
    const auto ut = ambient_coords.col(i);
    const Vector r = subtract(ut, matvec(inner, matvec_t(inner, ut)));
    s += dot(r, r);
  }
  return s / static_cast<double>(ambient_coords.cols());
}

inline double loss_ambient(const DodModel& model, const SnapshotSet& snaps) {
  snaps.validate();
  detail::require_dims(snaps.count() > 0, "loss_ambient: empty snapshot set");
  return loss_ambient(model, snaps.mu, ambient_project(model.ambient, snaps.u));
}

/// (1/N) Σ ‖u_i − A Aᵀ G u_i‖², the constant separating the two losses.
inline double ambient_residual_energy(const AmbientBasis& ambient, const SnapshotSet& snaps) {
  return squared_projection_error(ambient.a, *ambient.g, snaps.u) / static_cast<double>(snaps.count());
}

namespace detail {

/// Loss |ũ − QQᵀũ|² of one sample and its gradient through GS, roots and
/// seed; gradients are added to grads[0] (seed) and grads[1 + k] (root k).
inline double dod_sample_loss_grad(const DodModel& model, std::span<const double> mu, std::span<const double> ut,
                                   std::vector<Vector>& grads) {
  nn::Tape seed_tape = model.seed.record(mu);
  const Vector& s = seed_tape.output();
  std::vector<nn::Tape> root_tapes;
  root_tapes.reserve(model.n());
  Matrix w(model.ambient_dim(), model.n());
  for (std::size_t k = 0; k < model.n(); ++k) {
    root_tapes.push_back(model.roots[k].record(s));
    w.set_col(k, root_tapes.back().output());
  }
  nn::DiffGramSchmidt gs(w);
  const Matrix& q = gs.result();
  const Vector c = matvec_t(q, ut);
  const Vector r = subtract(ut, matvec(q, c));
  const Vector qr = matvec_t(q, r);
  // dL/dQ = −2 (r cᵀ + ũ (Qᵀ r)ᵀ)
  Matrix dq(q.rows(), q.cols());
  for (std::size_t j = 0; j < q.cols(); ++j)
    for (std::size_t i = 0; i < q.rows(); ++i) dq(i, j) = -2.0 * (r[i] * c[j] + ut[i] * qr[j]);
  const Matrix dw = gs.backward(dq);
  Vector ds(s.size(), 0.0);
  for (std::size_t k = 0; k < model.n(); ++k) {
    const Vector g = model.roots[k].backward(root_tapes[k], dw.col(k), grads[1 + k]);
    axpy(1.0, g, ds);
  }
  model.seed.backward(seed_tape, ds, grads[0]);
  return dot(r, r);
}

}  // namespace detail

/// Ambient loss and its gradient (one buffer per net, in DodModel::nets() order).
inline double loss_ambient_with_grad(const DodModel& model, const Matrix& mu, const Matrix& ambient_coords,
                                     std::vector<Vector>& grads) {
  double s = 0.0;
  for (std::size_t i = 0; i < ambient_coords.cols(); ++i)
    s += detail::dod_sample_loss_grad(model, mu.row_vec(i), ambient_coords.col(i), grads);
  const double inv = 1.0 / static_cast<double>(ambient_coords.cols());
  for (Vector& g : grads)
    for (double& x : g) x *= inv;
  return s * inv;
}

struct DodTrainResult {
  DodModel model;
  TrainHistory history;
};

/**
 * Train the inner module by Adam on the ambient loss. Ambient coordinates
 * ũ_i = AᵀG u_i are computed once. Training always orthonormalizes with the
 * differentiable Gram-Schmidt block; the returned model keeps its own
 * inference ORTH mode.
 */
inline DodTrainResult train_dod(DodModel model, const SnapshotSet& snaps, const TrainConfig& cfg) {
  snaps.validate();
  if (snaps.count() == 0) throw ConfigError("train_dod: no training snapshots");
  model.validate();
  detail::require_dims(snaps.mu_dim() == model.mu_dim(), "train_dod: parameter dimension mismatch");
  detail::require_dims(snaps.dof() == model.ambient.dof(), "train_dod: N_h mismatch");

  const Matrix coords = ambient_project(model.ambient, snaps.u);
  std::vector<Vector> mus;
  for (std::size_t i = 0; i < snaps.count(); ++i) mus.push_back(snaps.mu_of(i));

  auto nets = model.nets();
  TrainHistory hist = run_adam(
      nets, snaps.count(),
      [&](std::size_t i, std::vector<Vector>& grads) {
        return detail::dod_sample_loss_grad(model, mus[i], coords.col(i), grads);
      },
      [&](std::size_t i) {
        const Matrix q = orth(eval_stack(model, mus[i]), OrthMode::GramSchmidt);
        const auto ut = coords.col(i);
        const Vector r = subtract(ut, matvec(q, matvec_t(q, ut)));
        return dot(r, r);
      },
      cfg);
  return {std::move(model), std::move(hist)};
}

}  // namespace dod
