#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dod/model.hpp"

/** @file Non-intrusive reduced models: DOD-NN and the two POD-NN benchmarks. */

namespace dod {

/// φ(μ, ν)_j = Σ_k φ₁(μ)_{kj} φ₂(ν)_{kj}; both nets emit m·n values read
/// row-major as an m × n matrix.
struct SegregatedNet {
  nn::DenseNet phi1;
  nn::DenseNet phi2;
  std::size_t m = 1;
  std::size_t n = 1;

  std::size_t param_count() const { return phi1.param_count() + phi2.param_count(); }
  std::vector<nn::DenseNet*> nets() { return {&phi1, &phi2}; }

  void validate() const {
    detail::require_dims(m >= 1 && n >= 1, "SegregatedNet: m and n must be positive");
    detail::require_dims(phi1.output_dim() == m * n && phi2.output_dim() == m * n,
                         "SegregatedNet: both nets must emit m*n values");
  }
};

/// Shapes of φ₁ and φ₂ (hidden widths; leaky ReLU after each hidden layer).
struct SegArch {
  std::size_t m = 5;
  bool phi1_feature_rotsym = false;
  std::vector<std::size_t> phi1_hidden{40};
  std::vector<std::size_t> phi2_hidden{40};
  bool phi1_terminal_activation = true;  // leaky ReLU on φ₁'s output, none on φ₂
  double slope = 0.1;
};

inline SegregatedNet make_segregated(std::size_t mu_dim, std::size_t nu_dim, std::size_t n, const SegArch& arch,
                                     std::uint64_t seed) {
  if (arch.m < 1 || n < 1) throw ConfigError("make_segregated: m and n must be positive");
  SegregatedNet s;
  s.m = arch.m;
  s.n = n;
  s.phi1 = nn::DenseNet(mu_dim);
  if (arch.phi1_feature_rotsym) s.phi1.feature(nn::FeatureMap::RotSym);
  for (std::size_t h : arch.phi1_hidden) s.phi1.dense(h).leaky_relu(arch.slope);
  s.phi1.dense(arch.m * n);
  if (arch.phi1_terminal_activation) s.phi1.leaky_relu(arch.slope);
  s.phi2 = nn::DenseNet::mlp(nu_dim, arch.phi2_hidden, arch.m * n, false, arch.slope);
  Rng rng = make_rng(seed, 0xc0ef);
  s.phi1.init_uniform(rng);
  s.phi2.init_uniform(rng);
  return s;
}

inline Vector seg_combine(std::span<const double> a, std::span<const double> b, std::size_t m, std::size_t n) {
  Vector out(n, 0.0);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < n; ++j) out[j] += a[k * n + j] * b[k * n + j];
  return out;
}

inline Vector seg_eval(const SegregatedNet& net, std::span<const double> mu, std::span<const double> nu) {
  net.validate();
  return seg_combine(net.phi1.forward(mu), net.phi2.forward(nu), net.m, net.n);
}

namespace detail {

/// Squared error |target − φ(μ,ν)|² and its gradient into grads[o], grads[o+1].
inline double seg_sample_loss_grad(const SegregatedNet& net, std::span<const double> mu, std::span<const double> nu,
                                   std::span<const double> target, std::vector<Vector>& grads, std::size_t o = 0) {
  nn::Tape t1 = net.phi1.record(mu);
  nn::Tape t2 = net.phi2.record(nu);
  const Vector& a = t1.output();
  const Vector& b = t2.output();
  const Vector y = seg_combine(a, b, net.m, net.n);
  Vector dy(net.n);
  double loss = 0.0;
  for (std::size_t j = 0; j < net.n; ++j) {
    const double r = y[j] - target[j];
    loss += r * r;
    dy[j] = 2.0 * r;
  }
  Vector da(a.size()), db(b.size());
  for (std::size_t k = 0; k < net.m; ++k)
    for (std::size_t j = 0; j < net.n; ++j) {
      da[k * net.n + j] = dy[j] * b[k * net.n + j];
      db[k * net.n + j] = dy[j] * a[k * net.n + j];
    }
  net.phi1.backward(t1, da, grads[o]);
  net.phi2.backward(t2, db, grads[o + 1]);
  return loss;
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

/// Mean-square regression of φ onto per-sample targets (rows of μ, ν; columns of `targets`).
inline TrainHistory fit_segregated(SegregatedNet& net, const Matrix& mu, const Matrix& nu, const Matrix& targets,
                                   const TrainConfig& cfg) {
  net.validate();
  detail::require_dims(targets.rows() == net.n, "fit_segregated: target length differs from n");
  detail::require_dims(mu.rows() == targets.cols() && nu.rows() == targets.cols(), "fit_segregated: sample count mismatch");
  if (targets.cols() == 0) throw ConfigError("fit_segregated: no training samples");
  std::vector<Vector> mus, nus;
  for (std::size_t i = 0; i < targets.cols(); ++i) {
    mus.push_back(mu.row_vec(i));
    nus.push_back(nu.row_vec(i));
  }
  return run_adam(
      net.nets(), targets.cols(),
      [&](std::size_t i, std::vector<Vector>& grads) {
        return detail::seg_sample_loss_grad(net, mus[i], nus[i], targets.col(i), grads);
      },
      [&](std::size_t i) { return detail::sq_dist(seg_eval(net, mus[i], nus[i]), targets.col(i)); }, cfg);
}

// ---------------------------------------------------------------------------
// DOD-NN

struct DodNnModel {
  DodModel dod;
  SegregatedNet phi;
  OrthMode coeff_orth = OrthMode::HouseholderQR;  // ORTH used for the coefficient targets

  std::size_t param_count() const { return dod.param_count() + phi.param_count(); }

  void validate() const {
    dod.validate();
    phi.validate();
    detail::require_dims(phi.n == dod.n(), "DodNnModel: phi.n differs from dod.n");
  }
};

/// DOD coefficients c_i = V_{μ_i}ᵀ G u_i under `mode`, one column per sample.
inline Matrix dod_coefficients(const DodModel& dod, const SnapshotSet& snaps, OrthMode mode) {
  snaps.validate();
  const Matrix coords = ambient_project(dod.ambient, snaps.u);
  Matrix c(dod.n(), snaps.count());
  for (std::size_t i = 0; i < snaps.count(); ++i) c.set_col(i, matvec_t(eval_inner(dod, snaps.mu_of(i), mode), coords.col(i)));
  return c;
}

struct CoeffTrainResult {
  DodNnModel model;
  TrainHistory history;
  double coeff_rmse = 0.0;  // sqrt of the mean |c − φ|² over all training samples
};

/// Fit φ to the DOD coefficients of `snaps`; targets are cached once under dod.orth_mode.
inline CoeffTrainResult train_coefficients(const DodModel& dod, const SnapshotSet& snaps, const SegArch& arch,
                                           const TrainConfig& cfg, std::uint64_t seed) {
  snaps.validate();
  if (snaps.count() == 0) throw ConfigError("train_coefficients: no training snapshots");
  detail::require_dims(snaps.mu_dim() == dod.mu_dim(), "train_coefficients: parameter dimension mismatch");
  CoeffTrainResult r;
  r.model.dod = dod;
  r.model.coeff_orth = dod.orth_mode;
  r.model.phi = make_segregated(snaps.mu_dim(), snaps.nu_dim(), dod.n(), arch, seed);
  const Matrix targets = dod_coefficients(dod, snaps, r.model.coeff_orth);
  r.history = fit_segregated(r.model.phi, snaps.mu, snaps.nu, targets, cfg);
  double s = 0.0;
  for (std::size_t i = 0; i < snaps.count(); ++i)
    s += detail::sq_dist(seg_eval(r.model.phi, snaps.mu_of(i), snaps.nu_of(i)), targets.col(i));
  r.coeff_rmse = std::sqrt(s / static_cast<double>(snaps.count()));
  return r;
}

inline Vector rom_predict(const DodNnModel& m, std::span<const double> mu, std::span<const double> nu) {
  const Matrix v = eval_basis(m.dod, mu, m.coeff_orth);
  return matvec(v, seg_eval(m.phi, mu, nu));
}

// ---------------------------------------------------------------------------
// POD-NN benchmarks: u ≈ A φ_POD(μ, ν)

enum class BenchmarkKind { Monolithic, Segregated };

inline const char* to_string(BenchmarkKind k) { return k == BenchmarkKind::Monolithic ? "monolithic" : "segregated"; }

inline BenchmarkKind benchmark_kind_from_string(const std::string& s) {
  if (s == "monolithic" || s == "1") return BenchmarkKind::Monolithic;
  if (s == "segregated" || s == "2") return BenchmarkKind::Segregated;
  throw ConfigError("unknown benchmark variant '" + s + "'");
}

struct BenchmarkModel {
  BenchmarkKind kind = BenchmarkKind::Monolithic;
  AmbientBasis ambient;
  nn::DenseNet mono;  // (p + p') → N_A, Monolithic only
  SegregatedNet seg;  // n := N_A, Segregated only

  std::size_t param_count() const { return kind == BenchmarkKind::Monolithic ? mono.param_count() : seg.param_count(); }
};

/// Monolithic benchmark shape: optional leading feature layer, hidden widths, linear output.
struct MonoArch {
  bool feature_rotsym = false;
  std::vector<std::size_t> hidden{200, 200};
  double slope = 0.1;
};

inline nn::DenseNet make_monolithic(std::size_t in, std::size_t out, const MonoArch& arch, std::uint64_t seed) {
  nn::DenseNet net(in);
  if (arch.feature_rotsym) net.feature(nn::FeatureMap::RotSym);
  for (std::size_t h : arch.hidden) net.dense(h).leaky_relu(arch.slope);
  net.dense(out);
  Rng rng = make_rng(seed, 0xbe1);
  net.init_uniform(rng);
  return net;
}

inline Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector x(a.begin(), a.end());
  x.insert(x.end(), b.begin(), b.end());
  return x;
}

/// Ambient coefficients φ_POD(μ, ν).
inline Vector benchmark_coefficients(const BenchmarkModel& m, std::span<const double> mu, std::span<const double> nu) {
  return m.kind == BenchmarkKind::Monolithic ? m.mono.forward(concat(mu, nu)) : seg_eval(m.seg, mu, nu);
}

inline Vector rom_predict(const BenchmarkModel& m, std::span<const double> mu, std::span<const double> nu) {
  return ambient_lift(m.ambient, benchmark_coefficients(m, mu, nu));
}

struct BenchmarkTrainResult {
  BenchmarkModel model;
  TrainHistory history;
};

/// Regress the ambient coordinates AᵀG u_i. Exactly one of `mono_arch`, `seg_arch` is used, per `kind`.
inline BenchmarkTrainResult train_benchmark(BenchmarkKind kind, const AmbientBasis& ambient, const SnapshotSet& snaps,
                                            const MonoArch& mono_arch, const SegArch& seg_arch, const TrainConfig& cfg,
                                            std::uint64_t seed) {
  snaps.validate();
  if (snaps.count() == 0) throw ConfigError("train_benchmark: no training snapshots");
  detail::require_dims(snaps.dof() == ambient.dof(), "train_benchmark: N_h mismatch");
  BenchmarkTrainResult r;
  r.model.kind = kind;
  r.model.ambient = ambient;
  const Matrix targets = ambient_project(ambient, snaps.u);
  if (kind == BenchmarkKind::Segregated) {
    r.model.seg = make_segregated(snaps.mu_dim(), snaps.nu_dim(), ambient.dim(), seg_arch, seed);
    r.history = fit_segregated(r.model.seg, snaps.mu, snaps.nu, targets, cfg);
    return r;
  }
  r.model.mono = make_monolithic(snaps.mu_dim() + snaps.nu_dim(), ambient.dim(), mono_arch, seed);
  std::vector<Vector> xs;
  for (std::size_t i = 0; i < snaps.count(); ++i) xs.push_back(concat(snaps.mu_of(i), snaps.nu_of(i)));
  nn::DenseNet& net = r.model.mono;
  r.history = run_adam(
      {&net}, snaps.count(),
      [&](std::size_t i, std::vector<Vector>& grads) {
        nn::Tape t = net.record(xs[i]);
        const auto target = targets.col(i);
        Vector d(target.size());
        double loss = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) {
          const double e = t.output()[j] - target[j];
          loss += e * e;
          d[j] = 2.0 * e;
        }
        net.backward(t, d, grads[0]);
        return loss;
      },
      [&](std::size_t i) { return detail::sq_dist(net.forward(xs[i]), targets.col(i)); }, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// Errors

/// Predictions for every sample of `snaps`, one column each.
template <class Model>
Matrix rom_predict_all(const Model& m, const SnapshotSet& snaps) {
  Matrix out(snaps.dof(), snaps.count());
  for (std::size_t i = 0; i < snaps.count(); ++i) out.set_col(i, rom_predict(m, snaps.mu_of(i), snaps.nu_of(i)));
  return out;
}

/// Mean relative G-norm error of the predictions.
template <class Model>
double mre(const Model& m, const SnapshotSet& snaps) {
  snaps.validate();
  return mrpe(rom_predict_all(m, snaps), snaps.u, *snaps.g);
}

/// Mean-square error terms; total² = ambient² + dod² + coeff² up to round-off.
struct ErrorDecomposition {
  double ambient_sq = 0.0;  // (1/N) Σ ‖u − AAᵀGu‖²
  double dod_sq = 0.0;      // (1/N) Σ |ũ − ṼṼᵀũ|²
  double coeff_sq = 0.0;    // (1/N) Σ |c − φ|²
  double total_sq = 0.0;    // (1/N) Σ ‖u − u_rom‖²
  double identity_residual = 0.0;  // |total² − (ambient² + dod² + coeff²)|

  double relative_residual() const { return identity_residual / std::max(total_sq, std::numeric_limits<double>::min()); }
};

inline ErrorDecomposition error_decomposition(const DodNnModel& m, const SnapshotSet& snaps) {
  snaps.validate();
  detail::require_dims(snaps.count() > 0, "error_decomposition: empty snapshot set");
  detail::require_dims(snaps.dof() == m.dod.ambient.dof(), "error_decomposition: N_h mismatch");
  const GramMatrix& g = *snaps.g;
  ErrorDecomposition e;
  for (std::size_t i = 0; i < snaps.count(); ++i) {
    const Vector mu = snaps.mu_of(i);
    const auto u = snaps.u.col(i);
    const Vector ut = ambient_project(m.dod.ambient, u);
    const Vector ra = subtract(u, ambient_lift(m.dod.ambient, ut));
    e.ambient_sq += g.inner(ra, ra);
    const Matrix inner = eval_inner(m.dod, mu, m.coeff_orth);
    const Vector c = matvec_t(inner, ut);
    const Vector rd = subtract(ut, matvec(inner, c));
    e.dod_sq += dot(rd, rd);
    const Vector phi = seg_eval(m.phi, mu, snaps.nu_of(i));
    e.coeff_sq += detail::sq_dist(c, phi);
    const Vector rt = subtract(u, ambient_lift(m.dod.ambient, matvec(inner, phi)));
    e.total_sq += g.inner(rt, rt);
  }
  const double inv = 1.0 / static_cast<double>(snaps.count());
  e.ambient_sq *= inv;
  e.dod_sq *= inv;
  e.coeff_sq *= inv;
  e.total_sq *= inv;
  e.identity_residual = std::abs(e.total_sq - (e.ambient_sq + e.dod_sq + e.coeff_sq));
  return e;
}

// ---------------------------------------------------------------------------
// Parameter parity

/// Dense parameter count of in → hidden... → out.
inline std::size_t mlp_param_count(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::size_t c = 0, prev = in;
  for (std::size_t h : hidden) {
    c += prev * h + h;
    prev = h;
  }
  return c + prev * out + out;
}

/// Smallest width w in [1, max_width] minimizing |count(w) − target|.
inline std::size_t match_width(std::size_t target, const std::function<std::size_t(std::size_t)>& count,
                               std::size_t max_width = 4096) {
  std::size_t best = 1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t w = 1; w <= max_width; ++w) {
    const double gap = std::abs(static_cast<double>(count(w)) - static_cast<double>(target));
    if (gap < best_gap) {
      best_gap = gap;
      best = w;
    }
    if (count(w) > target) break;
  }
  return best;
}

inline double parity_gap(std::size_t benchmark_count, std::size_t reference_count) {
  return std::abs(static_cast<double>(benchmark_count) - static_cast<double>(reference_count)) /
         static_cast<double>(reference_count);
}

}  // namespace dod
