#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "hbo/model.hpp"

namespace hbo {

struct EpochLoss {
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochLoss> epochs;  // epochs[e - 1] for epoch e
  std::size_t best_epoch = 0;     // 1-based
  bool stopped_early = false;

  double best_validation_loss() const {
    return best_epoch ? epochs[best_epoch - 1].validation_loss : 0.0;
  }
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over every parameter; embedding row 0 stays frozen at its current value.
class AdamOptimizer {
 public:
  AdamOptimizer(const ScoreModel& model, double learning_rate, AdamOptions opts = {})
      : lr_(learning_rate), opts_(opts) {
    m_emb_ = Matrix::Zero(model.embedding.rows(), model.embedding.cols());
    v_emb_ = m_emb_;
    for (const auto& l : model.layers) {
      m_layers_.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    }
    v_layers_ = m_layers_;
  }

  void step(ScoreModel& model, Gradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    g.embedding.row(0).setZero();
    update(model.embedding, g.embedding, m_emb_, v_emb_, c1, c2);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      update(model.layers[i].weight, g.layers[i].weight, m_layers_[i].weight, v_layers_[i].weight, c1, c2);
      update(model.layers[i].bias, g.layers[i].bias, m_layers_[i].bias, v_layers_[i].bias, c1, c2);
    }
  }

 private:
  template <typename P, typename G>
  void update(P& param, const G& grad, P& m, P& v, double c1, double c2) const {
    m = opts_.beta1 * m + (1.0 - opts_.beta1) * grad;
    v = opts_.beta2 * v + (1.0 - opts_.beta2) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + opts_.epsilon);
  }

  double lr_;
  AdamOptions opts_;
  std::size_t t_ = 0;
  Matrix m_emb_, v_emb_;
  std::vector<DenseLayer> m_layers_, v_layers_;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochLoss&)>;

/// Mini-batch Adam with early stopping. Hyperparameters come from
/// `model.config`. Training stops once the validation loss has failed to
/// improve for `patience` consecutive epochs, so `patience == 0` always stops
/// after the first epoch. The returned model carries the weights of the best
/// validation epoch.
inline std::pair<ScoreModel, TrainHistory> train(ScoreModel model, std::span<const Sample> train_set,
                                                 std::span<const Sample> val_set,
                                                 const EpochCallback& on_epoch = {}) {
  if (train_set.empty() || val_set.empty())
    throw DataError("training and validation sets must be non-empty");
  const ModelConfig cfg = model.config;
  cfg.validate();
  check_shapes(model);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamOptimizer opt(model, cfg.learning_rate);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  batch.reserve(cfg.batch_size);

  TrainHistory history;
  ScoreModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      auto g = gradients(model, batch);
      opt.step(model, g);
    }
    const EpochLoss el{dataset_loss(model, train_set), dataset_loss(model, val_set)};
    history.epochs.push_back(el);
    if (on_epoch) on_epoch(epoch, el);

    if (el.validation_loss < best_val) {
      best_val = el.validation_loss;
      history.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) {
      history.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  return {std::move(best), std::move(history)};
}

}  // namespace hbo
