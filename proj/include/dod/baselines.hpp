#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dod/nets.hpp"
#include "dod/pod.hpp"
#include "dod/sampling.hpp"
#include "dod/training.hpp"

/** @file Comparison methods: global POD, clustered POD, POD-enhanced autoencoder. */

namespace dod {

// ---------------------------------------------------------------------------
// Global POD

/// Reconstruction V Vᵀ G u of every column.
inline Matrix pod_reconstruct(const AmbientBasis& pod, const Matrix& u) { return project_stack(pod.a, *pod.g, u); }

// ---------------------------------------------------------------------------
// k-means

struct KMeansResult {
  std::vector<std::size_t> labels;
  Matrix centroids;  // d × k
  double inertia = 0.0;
};

namespace detail {

inline double sq_dist_cols(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  const auto x = a.col(i);
  const auto y = b.col(j);
  double s = 0.0;
  for (std::size_t r = 0; r < x.size(); ++r) s += (x[r] - y[r]) * (x[r] - y[r]);
  return s;
}

inline KMeansResult kmeans_once(const Matrix& pts, std::size_t k, std::size_t max_iter, Rng& rng) {
  const std::size_t n = pts.cols();
  // k-means++ seeding
  Matrix cent(pts.rows(), k);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  cent.set_col(0, pts.col(first));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist_cols(pts, i, cent, c - 1));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = uniform(rng, 0.0, total);
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    cent.set_col(c, pts.col(pick));
  }

  KMeansResult res;
  res.labels.assign(n, 0);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist_cols(pts, i, cent, c);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (res.labels[i] != best) {
        res.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sum(pts.rows(), k);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      axpy(1.0, pts.col(i), sum.col(res.labels[i]));
      ++cnt[res.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] == 0) continue;  // keep the previous centroid for an emptied cluster
      for (std::size_t r = 0; r < pts.rows(); ++r) cent(r, c) = sum(r, c) / static_cast<double>(cnt[c]);
    }
  }
  res.centroids = std::move(cent);
  for (std::size_t i = 0; i < n; ++i) res.inertia += sq_dist_cols(pts, i, res.centroids, res.labels[i]);
  return res;
}

}  // namespace detail

/// Euclidean k-means on the columns of `pts`: k-means++ init, `restarts`
/// runs of at most `max_iter` Lloyd iterations, lowest inertia kept.
inline KMeansResult kmeans(const Matrix& pts, std::size_t k, std::uint64_t seed, std::size_t restarts = 5,
                           std::size_t max_iter = 100) {
  if (k < 1) throw ConfigError("kmeans: need at least one cluster");
  if (k > pts.cols())
    throw ConfigError("kmeans: " + std::to_string(k) + " clusters requested for " + std::to_string(pts.cols()) +
                      " points");
  Rng rng = make_rng(seed, 0x4b);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    KMeansResult cur = detail::kmeans_once(pts, k, max_iter, rng);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Clustered POD

struct ClusteredPod {
  std::vector<AmbientBasis> bases;  // one G-orthonormal rank-n basis per cluster
  std::vector<Vector> centroids;    // full-space centroids
  std::vector<std::size_t> labels;  // training assignment
  std::shared_ptr<const GramMatrix> g;

  std::size_t clusters() const noexcept { return bases.size(); }
  std::size_t n() const noexcept { return bases.empty() ? 0 : bases.front().dim(); }
};

/**
 * k-means on full-rank ambient coordinates (Euclidean there equals the
 * G-distance between snapshots), then a rank-n generalized POD per cluster.
 */
inline ClusteredPod fit_clustered_pod(const SnapshotSet& snaps, std::size_t c, std::size_t n, std::uint64_t seed) {
  snaps.validate();
  if (c < 1) throw ConfigError("fit_clustered_pod: c must be >= 1");
  if (c > snaps.count())
    throw ConfigError("fit_clustered_pod: c=" + std::to_string(c) + " exceeds the " + std::to_string(snaps.count()) +
                      " training snapshots");
  ClusteredPod out;
  out.g = snaps.g;
  std::vector<std::size_t> labels(snaps.count(), 0);
  if (c > 1) {
    const AmbientBasis full = build_ambient(snaps, numerical_rank(snaps));
    labels = kmeans(ambient_project(full, snaps.u), c, seed).labels;
  }
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == k) idx.push_back(i);
    if (idx.size() < n)
      throw EmptyOrThinCluster("fit_clustered_pod: cluster " + std::to_string(k) + " has " +
                               std::to_string(idx.size()) + " members, fewer than n=" + std::to_string(n));
    const SnapshotSet sub = snaps.subset(idx);
    out.bases.push_back(build_ambient(sub, n));
    Vector centroid(snaps.dof(), 0.0);
    for (std::size_t i : idx) axpy(1.0 / static_cast<double>(idx.size()), snaps.u.col(i), centroid);
    out.centroids.push_back(std::move(centroid));
  }
  out.labels = std::move(labels);
  return out;
}

struct ClusteredReconstruction {
  Vector reconstruction;
  std::size_t cluster = 0;
  double residual = 0.0;  // G-norm
};

/// Best reconstruction over all cluster bases; ties go to the lowest index.
inline ClusteredReconstruction clustered_reconstruct_detail(const ClusteredPod& m, std::span<const double> u) {
  detail::require_dims(!m.bases.empty(), "clustered_reconstruct: empty model");
  ClusteredReconstruction best;
  best.residual = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.bases.size(); ++k) {
    Vector rec = project_onto(m.bases[k].a, *m.g, u);
    const double res = g_norm(subtract(u, rec), *m.g);
    if (res < best.residual) {
      best.residual = res;
      best.cluster = k;
      best.reconstruction = std::move(rec);
    }
  }
  return best;
}

inline Vector clustered_reconstruct(const ClusteredPod& m, std::span<const double> u) {
  return clustered_reconstruct_detail(m, u).reconstruction;
}

inline Matrix clustered_reconstruct(const ClusteredPod& m, const Matrix& u) {
  Matrix out(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.cols(); ++i) out.set_col(i, clustered_reconstruct(m, u.col(i)));
  return out;
}

// ---------------------------------------------------------------------------
// POD-enhanced autoencoder: u ↦ A ψ(ψ′(AᵀG u))

struct AeArch {
  std::vector<std::size_t> encoder_hidden;
  bool encoder_terminal_activation = true;
  std::vector<std::size_t> decoder_hidden{100, 100};
  double slope = 0.1;
  bool linear = false;  // drop every activation
};

struct PodAutoencoder {
  AmbientBasis ambient;
  nn::DenseNet encoder;  // N_A → n
  nn::DenseNet decoder;  // n → N_A

  std::size_t latent() const noexcept { return encoder.output_dim(); }
  std::size_t param_count() const { return encoder.param_count() + decoder.param_count(); }

  /// Euclidean Lipschitz bound of the decoder; the lift by A is a G-isometry.
  double decoder_lipschitz() const { return decoder.lipschitz_upper_bound(); }
};

inline PodAutoencoder make_autoencoder(const AmbientBasis& ambient, std::size_t n, const AeArch& arch,
                                       std::uint64_t seed) {
  if (n < 1 || n >= ambient.dim()) throw ConfigError("make_autoencoder: need 1 <= n < N_A");
  PodAutoencoder ae;
  ae.ambient = ambient;
  ae.encoder = nn::DenseNet(ambient.dim());
  for (std::size_t h : arch.encoder_hidden) {
    ae.encoder.dense(h);
    if (!arch.linear) ae.encoder.leaky_relu(arch.slope);
  }
  ae.encoder.dense(n);
  if (!arch.linear && arch.encoder_terminal_activation) ae.encoder.leaky_relu(arch.slope);
  ae.decoder = nn::DenseNet(n);
  for (std::size_t h : arch.decoder_hidden) {
    ae.decoder.dense(h);
    if (!arch.linear) ae.decoder.leaky_relu(arch.slope);
  }
  ae.decoder.dense(ambient.dim());
  Rng rng = make_rng(seed, 0xae);
  ae.encoder.init_uniform(rng);
  ae.decoder.init_uniform(rng);
  return ae;
}

inline Vector ae_reconstruct(const PodAutoencoder& ae, std::span<const double> u) {
  return ambient_lift(ae.ambient, ae.decoder.forward(ae.encoder.forward(ambient_project(ae.ambient, u))));
}

inline Matrix ae_reconstruct(const PodAutoencoder& ae, const Matrix& u) {
  Matrix out(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.cols(); ++i) out.set_col(i, ae_reconstruct(ae, u.col(i)));
  return out;
}

struct AeTrainResult {
  PodAutoencoder model;
  TrainHistory history;
};

/// Adam on the mean squared reconstruction error of the ambient coordinates.
inline AeTrainResult fit_autoencoder(const SnapshotSet& snaps, const AmbientBasis& ambient, std::size_t n,
                                     const AeArch& arch, const TrainConfig& cfg, std::uint64_t seed) {
  snaps.validate();
  if (snaps.count() == 0) throw ConfigError("fit_autoencoder: no training snapshots");
  detail::require_dims(snaps.dof() == ambient.dof(), "fit_autoencoder: N_h mismatch");
  AeTrainResult r;
  r.model = make_autoencoder(ambient, n, arch, seed);
  const Matrix coords = ambient_project(ambient, snaps.u);
  nn::DenseNet& enc = r.model.encoder;
  nn::DenseNet& dec = r.model.decoder;
  r.history = run_adam(
      {&enc, &dec}, snaps.count(),
      [&](std::size_t i, std::vector<Vector>& grads) {
        const auto x = coords.col(i);
        nn::Tape te = enc.record(x);
        nn::Tape td = dec.record(te.output());
        Vector d(x.size());
        double loss = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double e = td.output()[j] - x[j];
          loss += e * e;
          d[j] = 2.0 * e;
        }
        const Vector dz = dec.backward(td, d, grads[1]);
        enc.backward(te, dz, grads[0]);
        return loss;
      },
      [&](std::size_t i) {
        const auto x = coords.col(i);
        const Vector y = dec.forward(enc.forward(x));
        double loss = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) loss += (y[j] - x[j]) * (y[j] - x[j]);
        return loss;
      },
      cfg);
  return r;
}

}  // namespace dod
