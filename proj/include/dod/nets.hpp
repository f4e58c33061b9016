#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "dod/linalg.hpp"
#include "dod/sampling.hpp"

/** @file Minimal dense network stack with hand-written reverse mode.

    A DenseNet owns a flat parameter vector; each Dense layer addresses its
    row-major weights followed by its biases at a fixed offset. `record`
    runs a forward pass and keeps every intermediate on a single-use Tape,
    `backward` walks it in reverse and accumulates parameter gradients.
 */

namespace dod::nn {

enum class FeatureMap { RotSym };

inline const char* to_string(FeatureMap f) {
  switch (f) {
    case FeatureMap::RotSym:
      return "rotsym";
  }
  return "?";
}

inline FeatureMap feature_map_from_string(const std::string& s) {
  if (s == "rotsym") return FeatureMap::RotSym;
  throw ConfigError("unknown feature map '" + s + "'");
}

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;  // into DenseNet::params
  std::size_t weight_count() const noexcept { return in * out; }
  std::size_t param_count() const noexcept { return in * out + out; }
};
struct LeakyRelu {
  double slope = 0.1;
};
struct Feature {
  FeatureMap id = FeatureMap::RotSym;
};
/// 1 − ρ(2 − ρ(x + 1)): identity on [−1, 1], saturates to ±1 outside.
struct Clamp {};
/// Shape annotation: the flat vector is read as a column-major rows × cols matrix.
struct Reshape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

using Layer = std::variant<Dense, LeakyRelu, Feature, Clamp, Reshape>;

/// [θ, x₀, y₀, ...] ↦ [cos 4θ, sin 4θ, x₀, y₀, ...]
inline Vector feature_rotsym(std::span<const double> x) {
  detail::require_dims(!x.empty(), "feature_rotsym: empty input");
  Vector y(x.size() + 1);
  y[0] = std::cos(4.0 * x[0]);
  y[1] = std::sin(4.0 * x[0]);
  std::copy(x.begin() + 1, x.end(), y.begin() + 2);
  return y;
}

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

inline double clamp_unit(double x) {
  const auto relu = [](double t) { return t > 0.0 ? t : 0.0; };
  return 1.0 - relu(2.0 - relu(x + 1.0));
}

/// Intermediates of one forward pass. values[0] is the input, values[k + 1]
/// the output of layer k. Single use: backward marks it consumed.
struct Tape {
  std::vector<Vector> values;
  bool consumed = false;
  const Vector& output() const { return values.back(); }
};

class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::size_t input_dim) : input_dim_(input_dim), output_dim_(input_dim) {}

  // -- building ------------------------------------------------------------

  DenseNet& dense(std::size_t out) {
    Dense d{output_dim_, out, params_.size()};
    params_.resize(params_.size() + d.param_count(), 0.0);
    layers_.emplace_back(d);
    output_dim_ = out;
    return *this;
  }
  DenseNet& leaky_relu(double slope = 0.1) {
    layers_.emplace_back(LeakyRelu{slope});
    return *this;
  }
  DenseNet& feature(FeatureMap id) {
    detail::require_dims(output_dim_ >= 1, "feature layer needs a non-empty input");
    layers_.emplace_back(Feature{id});
    output_dim_ += 1;
    return *this;
  }
  DenseNet& clamp() {
    layers_.emplace_back(Clamp{});
    return *this;
  }
  DenseNet& reshape(std::size_t rows, std::size_t cols) {
    detail::require_dims(rows * cols == output_dim_, "reshape: rows*cols does not match the layer width");
    layers_.emplace_back(Reshape{rows, cols});
    return *this;
  }

  /// in → widths... → out, leaky ReLU between dense layers and optionally after the last.
  static DenseNet mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                      bool terminal_activation = false, double slope = 0.1) {
    DenseNet net(in);
    for (std::size_t h : hidden) net.dense(h).leaky_relu(slope);
    net.dense(out);
    if (terminal_activation) net.leaky_relu(slope);
    return net;
  }

  /// Weights uniform in ±sqrt(6 / (fan_in + fan_out)), biases zero.
  void init_uniform(Rng& rng) {
    for (const Layer& l : layers_) {
      if (const auto* d = std::get_if<Dense>(&l)) {
        const double a = std::sqrt(6.0 / static_cast<double>(d->in + d->out));
        for (std::size_t k = 0; k < d->weight_count(); ++k) params_[d->offset + k] = uniform(rng, -a, a);
        for (std::size_t k = 0; k < d->out; ++k) params_[d->offset + d->weight_count() + k] = 0.0;
      }
    }
  }

  /// Zero the weights and biases of the last dense layer.
  void zero_output_layer() {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      if (const auto* d = std::get_if<Dense>(&*it)) {
        std::fill(params_.begin() + static_cast<std::ptrdiff_t>(d->offset),
                  params_.begin() + static_cast<std::ptrdiff_t>(d->offset + d->param_count()), 0.0);
        return;
      }
  }

  // -- access --------------------------------------------------------------

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  std::size_t param_count() const noexcept { return params_.size(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  void set_params(std::span<const double> p) {
    detail::require_dims(p.size() == params_.size(), "DenseNet::set_params: length mismatch");
    std::copy(p.begin(), p.end(), params_.begin());
  }

  double weight(const Dense& d, std::size_t o, std::size_t i) const { return params_[d.offset + o * d.in + i]; }
  double bias(const Dense& d, std::size_t o) const { return params_[d.offset + d.weight_count() + o]; }

  /// Dense layer weights as an out × in matrix.
  Matrix weight_matrix(const Dense& d) const {
    Matrix w(d.out, d.in);
    for (std::size_t o = 0; o < d.out; ++o)
      for (std::size_t i = 0; i < d.in; ++i) w(o, i) = weight(d, o, i);
    return w;
  }

  bool operator==(const DenseNet& other) const {
    if (input_dim_ != other.input_dim_ || output_dim_ != other.output_dim_ || params_ != other.params_) return false;
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k)
      if (!same_layer(layers_[k], other.layers_[k])) return false;
    return true;
  }

  // -- evaluation ----------------------------------------------------------

  Vector forward(std::span<const double> x) const {
    detail::require_dims(x.size() == input_dim_, "DenseNet::forward: input has length " + std::to_string(x.size()) +
                                                     ", expected " + std::to_string(input_dim_));
    Vector cur(x.begin(), x.end());
    for (const Layer& l : layers_) cur = apply_layer(l, cur);
    return cur;
  }

  Tape record(std::span<const double> x) const {
    detail::require_dims(x.size() == input_dim_, "DenseNet::record: input length mismatch");
    Tape t;
    t.values.reserve(layers_.size() + 1);
    t.values.emplace_back(x.begin(), x.end());
    for (const Layer& l : layers_) t.values.push_back(apply_layer(l, t.values.back()));
    return t;
  }

  /**
   * Reverse pass over `tape`. Adds dLoss/dparams into `param_grad` (which must
   * have param_count() entries) and returns dLoss/dinput.
   */
  Vector backward(Tape& tape, std::span<const double> output_grad, std::span<double> param_grad) const {
    if (tape.consumed) throw TapeConsumed("DenseNet::backward: tape already consumed");
    detail::require_dims(tape.values.size() == layers_.size() + 1, "DenseNet::backward: tape from another network");
    detail::require_dims(output_grad.size() == output_dim_, "DenseNet::backward: output gradient length mismatch");
    detail::require_dims(param_grad.size() == params_.size(), "DenseNet::backward: gradient buffer length mismatch");
    tape.consumed = true;
    Vector g(output_grad.begin(), output_grad.end());
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const Vector& in = tape.values[k];
      g = std::visit(
          [&](const auto& layer) -> Vector {
            using T = std::decay_t<decltype(layer)>;
            if constexpr (std::is_same_v<T, Dense>) {
              Vector gin(layer.in, 0.0);
              double* gw = param_grad.data() + layer.offset;
              double* gb = gw + layer.weight_count();
              const double* w = params_.data() + layer.offset;
              for (std::size_t o = 0; o < layer.out; ++o) {
                const double go = g[o];
                if (go == 0.0) continue;
                gb[o] += go;
                const double* wrow = w + o * layer.in;
                double* gwrow = gw + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) {
                  gwrow[i] += go * in[i];
                  gin[i] += wrow[i] * go;
                }
              }
              return gin;
            } else if constexpr (std::is_same_v<T, LeakyRelu>) {
              Vector gin(g.size());
              for (std::size_t i = 0; i < g.size(); ++i) gin[i] = in[i] >= 0.0 ? g[i] : layer.slope * g[i];
              return gin;
            } else if constexpr (std::is_same_v<T, Feature>) {
              Vector gin(in.size());
              gin[0] = -4.0 * std::sin(4.0 * in[0]) * g[0] + 4.0 * std::cos(4.0 * in[0]) * g[1];
              for (std::size_t i = 1; i < in.size(); ++i) gin[i] = g[i + 1];
              return gin;
            } else if constexpr (std::is_same_v<T, Clamp>) {
              Vector gin(g.size());
              for (std::size_t i = 0; i < g.size(); ++i) gin[i] = (in[i] > -1.0 && in[i] < 1.0) ? g[i] : 0.0;
              return gin;
            } else {
              return g;
            }
          },
          layers_[k]);
    }
    return g;
  }

  struct Gradients {
    Vector params;
    Vector input;
  };

  Gradients backward(Tape& tape, std::span<const double> output_grad) const {
    Gradients out;
    out.params.assign(params_.size(), 0.0);
    out.input = backward(tape, output_grad, out.params);
    return out;
  }

  /// Upper bound on the Lipschitz constant (Euclidean): product of dense
  /// spectral norms times activation / feature bounds.
  double lipschitz_upper_bound() const {
    double l = 1.0;
    for (const Layer& layer : layers_) {
      if (const auto* d = std::get_if<Dense>(&layer)) {
        l *= singular_values(weight_matrix(*d)).front();
      } else if (const auto* a = std::get_if<LeakyRelu>(&layer)) {
        l *= std::max(1.0, std::abs(a->slope));
      } else if (std::holds_alternative<Feature>(layer)) {
        l *= 4.0;
      }
    }
    return l;
  }

 private:
  Vector apply_layer(const Layer& l, const Vector& x) const {
    return std::visit(
        [&](const auto& layer) -> Vector {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, Dense>) {
            Vector y(layer.out);
            const double* w = params_.data() + layer.offset;
            const double* b = w + layer.weight_count();
            for (std::size_t o = 0; o < layer.out; ++o) {
              const double* wrow = w + o * layer.in;
              double s = b[o];
              for (std::size_t i = 0; i < layer.in; ++i) s += wrow[i] * x[i];
              y[o] = s;
            }
            return y;
          } else if constexpr (std::is_same_v<T, LeakyRelu>) {
            Vector y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = nn::leaky_relu(x[i], layer.slope);
            return y;
          } else if constexpr (std::is_same_v<T, Feature>) {
            return feature_rotsym(x);
          } else if constexpr (std::is_same_v<T, Clamp>) {
            Vector y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = clamp_unit(x[i]);
            return y;
          } else {
            return x;
          }
        },
        l);
  }

  static bool same_layer(const Layer& a, const Layer& b) {
    if (a.index() != b.index()) return false;
    if (const auto* d = std::get_if<Dense>(&a)) {
      const auto& e = std::get<Dense>(b);
      return d->in == e.in && d->out == e.out && d->offset == e.offset;
    }
    if (const auto* r = std::get_if<LeakyRelu>(&a)) return r->slope == std::get<LeakyRelu>(b).slope;
    if (const auto* f = std::get_if<Feature>(&a)) return f->id == std::get<Feature>(b).id;
    if (const auto* s = std::get_if<Reshape>(&a)) {
      const auto& t = std::get<Reshape>(b);
      return s->rows == t.rows && s->cols == t.cols;
    }
    return true;
  }

  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Differentiable Gram-Schmidt
// ---------------------------------------------------------------------------

/**
 * Euclidean modified Gram-Schmidt (two projection passes) whose elementary
 * steps are recorded so that dLoss/dW can be recovered from dLoss/dQ.
 * Throws NearRankDeficient when a pivot norm falls below 1e-10.
 */
class DiffGramSchmidt {
 public:
  static constexpr double kPivotTolerance = 1e-10;

  explicit DiffGramSchmidt(const Matrix& w) : q_(w) {
    const std::size_t n = w.cols();
    detail::require_dims(n <= w.rows(), "gram_schmidt_diff: more columns than rows");
    for (std::size_t j = 0; j < n; ++j) {
      auto qj = q_.col(j);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < j; ++k) {
          Op op{Op::Project, j, k, dot(q_.col(k), qj), Vector(qj.begin(), qj.end())};
          axpy(-op.coef, q_.col(k), qj);
          ops_.push_back(std::move(op));
        }
      }
      const double nrm = norm2(qj);
      if (!(nrm >= kPivotTolerance))
        throw NearRankDeficient(j, "gram_schmidt_diff: pivot " + std::to_string(j) + " below 1e-10");
      for (double& x : qj) x /= nrm;
      ops_.push_back(Op{Op::Normalize, j, j, nrm, {}});
    }
  }

  const Matrix& result() const noexcept { return q_; }

  /// dLoss/dW from dLoss/dQ. Single use.
  Matrix backward(const Matrix& grad_q) {
    if (consumed_) throw TapeConsumed("gram_schmidt_diff: tape already consumed");
    detail::require_dims(grad_q.rows() == q_.rows() && grad_q.cols() == q_.cols(),
                         "gram_schmidt_diff: gradient shape mismatch");
    consumed_ = true;
    Matrix g = grad_q;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      auto gj = g.col(it->j);
      if (it->kind == Op::Normalize) {
        // y = x / |x|  =>  dx = (g − y (yᵀ g)) / |x|
        const auto y = q_.col(it->j);
        const double yg = dot(y, gj);
        for (std::size_t i = 0; i < gj.size(); ++i) gj[i] = (gj[i] - y[i] * yg) / it->coef;
      } else {
        // out = x − (q_kᵀ x) q_k
        const auto qk = q_.col(it->k);
        const double qg = dot(qk, gj);
        auto gk = g.col(it->k);
        for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += -it->coef * gj[i] - qg * it->before[i];
        axpy(-qg, qk, gj);
      }
    }
    return g;
  }

 private:
  struct Op {
    enum Kind { Project, Normalize } kind;
    std::size_t j;
    std::size_t k;
    double coef;    // projection coefficient, or the norm for Normalize
    Vector before;  // column j before a projection
  };
  Matrix q_;
  std::vector<Op> ops_;
  bool consumed_ = false;
};

inline DiffGramSchmidt gram_schmidt_diff(const Matrix& w) { return DiffGramSchmidt(w); }

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// One bias-corrected Adam update. A non-finite gradient leaves params and
/// state untouched and throws NonFiniteGradient.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamHyper& hyper = {}) {
  detail::require_dims(params.size() == grads.size() && state.m.size() == params.size() &&
                           state.v.size() == params.size(),
                       "adam_step: shape mismatch");
  if (!all_finite(grads)) throw NonFiniteGradient("adam_step: non-finite gradient, step skipped");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
  }
}

/// Adam over several networks that train jointly.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<DenseNet*> nets, AdamHyper hyper) : nets_(std::move(nets)), hyper_(hyper) {
    for (const DenseNet* n : nets_) states_.emplace_back(n->param_count());
  }

  /// `grads[k]` pairs with the k-th network. All-or-nothing: a single
  /// non-finite entry skips the whole step.
  void step(const std::vector<Vector>& grads) {
    detail::require_dims(grads.size() == nets_.size(), "AdamOptimizer::step: gradient count mismatch");
    for (const Vector& g : grads)
      if (!all_finite(g)) throw NonFiniteGradient("AdamOptimizer: non-finite gradient, step skipped");
    for (std::size_t k = 0; k < nets_.size(); ++k) adam_step(nets_[k]->params(), grads[k], states_[k], hyper_);
  }

  AdamHyper& hyper() noexcept { return hyper_; }

 private:
  std::vector<DenseNet*> nets_;
  std::vector<AdamState> states_;
  AdamHyper hyper_;
};

inline std::vector<Vector> zero_grads(const std::vector<DenseNet*>& nets) {
  std::vector<Vector> g;
  for (const DenseNet* n : nets) g.emplace_back(n->param_count(), 0.0);
  return g;
}

}  // namespace dod::nn
