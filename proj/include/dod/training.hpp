#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dod/nets.hpp"

namespace dod {

/// Optimization settings shared by every trainable component.
struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  double lr_decay = 1.0;  // multiplicative, applied after every epoch
  std::size_t max_consecutive_skips = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
      throw ConfigError("TrainConfig: validation_fraction must lie in [0, 1)");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("TrainConfig: lr_decay must lie in (0, 1]");
  }
};

/// Per-epoch losses; index 0 holds the losses before the first update.
struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;  // empty when no validation split was used
  std::size_t best_epoch = 0;
  std::size_t skipped_steps = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
};

namespace detail {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

inline Split validation_split(std::size_t n, double fraction, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t n_val = n >= 10 ? static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))) : 0;
  n_val = std::min(n_val, n - 1);
  Split s;
  s.val.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

}  // namespace detail

/**
 * Mini-batch Adam with best-checkpoint selection on a held-out split.
 *
 * `loss_grad(i, grads)` returns the loss of sample i and adds its gradient
 * (one buffer per net) into `grads`; it may throw NearRankDeficient, which
 * skips the whole batch. `loss_only(i)` evaluates without gradients.
 * The nets are left holding the best checkpoint.
 */
template <class LossGrad, class LossOnly>
TrainHistory run_adam(const std::vector<nn::DenseNet*>& nets, std::size_t n_samples, LossGrad&& loss_grad,
                      LossOnly&& loss_only, const TrainConfig& cfg) {
  cfg.validate();
  if (n_samples == 0) throw ConfigError("training requires at least one sample");
  Rng rng = make_rng(cfg.seed, 0x7a1);
  const detail::Split split = detail::validation_split(n_samples, cfg.validation_fraction, rng);
  const bool has_val = !split.val.empty();

  TrainHistory hist;
  hist.n_train = split.train.size();
  hist.n_val = split.val.size();

  const auto mean_loss = [&](const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t i : idx) {
      try {
        s += loss_only(i);
      } catch (const NearRankDeficient&) {
        return std::numeric_limits<double>::infinity();
      }
    }
    return s / static_cast<double>(idx.size());
  };

  nn::AdamOptimizer opt(nets, nn::AdamHyper{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps});
  std::vector<Vector> best;
  for (const nn::DenseNet* n : nets) best.emplace_back(n->params().begin(), n->params().end());

  hist.train_loss.push_back(mean_loss(split.train));
  if (has_val) hist.val_loss.push_back(mean_loss(split.val));
  double best_score = has_val ? hist.val_loss.back() : hist.train_loss.back();

  const std::size_t batch = cfg.batch_size == 0 ? split.train.size() : std::min(cfg.batch_size, split.train.size());
  std::vector<std::size_t> order = split.train;
  std::size_t consecutive_skips = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<Vector> grads = nn::zero_grads(nets);
      double batch_loss = 0.0;
      bool ok = true;
      try {
        for (std::size_t b = start; b < stop; ++b) batch_loss += loss_grad(order[b], grads);
      } catch (const NearRankDeficient&) {
        ok = false;
      }
      if (ok) {
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (Vector& g : grads)
          for (double& x : g) x *= scale;
        try {
          opt.step(grads);
        } catch (const NonFiniteGradient&) {
          ok = false;
        }
      }
      if (!ok) {
        ++hist.skipped_steps;
        if (++consecutive_skips >= cfg.max_consecutive_skips)
          throw TrainingAborted("training aborted after " + std::to_string(consecutive_skips) +
                                " consecutive skipped steps (collapsed roots or non-finite gradients) at epoch " +
                                std::to_string(epoch));
        continue;
      }
      consecutive_skips = 0;
      epoch_loss += batch_loss;
      epoch_count += stop - start;
    }
    opt.hyper().lr *= cfg.lr_decay;

    hist.train_loss.push_back(epoch_count ? epoch_loss / static_cast<double>(epoch_count)
                                          : std::numeric_limits<double>::infinity());
    double score = hist.train_loss.back();
    if (has_val) {
      hist.val_loss.push_back(mean_loss(split.val));
      score = hist.val_loss.back();
    }
    if (score < best_score) {
      best_score = score;
      hist.best_epoch = epoch;
      for (std::size_t k = 0; k < nets.size(); ++k) best[k].assign(nets[k]->params().begin(), nets[k]->params().end());
    }
  }
  for (std::size_t k = 0; k < nets.size(); ++k) nets[k]->set_params(best[k]);
  return hist;
}

}  // namespace dod
