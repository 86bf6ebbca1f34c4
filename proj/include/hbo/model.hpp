#pragma once

// Embedding MLP for two-output score regression.
//
// Input layout of the first dense layer, for `lineup_len` tokens of width
// `embedding_dim` and `covariate_count` covariates:
//
//   [ E[t_0] | E[t_1] | ... | E[t_{L-1}] | c_0 ... c_{C-1} ]
//
// i.e. the embedding rows are flattened slot by slot, then the standardized
// covariates follow. Hidden layers apply the configured activation; the final
// layer is linear with two units (home goals, away goals) in scaled units.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbo/error.hpp"
#include "hbo/features.hpp"

namespace hbo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { relu, tanh, identity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "relu";
}

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 25;
  std::size_t lineup_len = kLineupSlots;
  std::size_t covariate_count = kCovariateCount;
  std::vector<std::size_t> hidden_sizes{256, 128, 64};
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 1;

  std::size_t input_width() const { return lineup_len * embedding_dim + covariate_count; }

  void validate() const {
    if (hidden_sizes.empty()) throw ConfigError("hidden_sizes must not be empty");
    for (auto h : hidden_sizes)
      if (h == 0) throw ConfigError("hidden layer widths must be positive");
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    if (lineup_len % 2 != 0) throw ConfigError("lineup_len must be even");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.bias.size() == b.bias.size() && a.weight == b.weight && a.bias == b.bias;
  }
};

struct ScoreModel {
  ModelConfig config;
  Matrix embedding;  // (vocab_size + 1) x embedding_dim, row 0 is the null token
  std::vector<DenseLayer> layers;
  NormalizationStats stats;

  std::size_t parameter_count() const {
    std::size_t n = static_cast<std::size_t>(embedding.size());
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }
};

/// Embedding rows ~ N(0, 1) with row 0 zeroed; dense weights and biases
/// ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Deterministic in `config.seed`.
inline ScoreModel init_model(const ModelConfig& config,
                             NormalizationStats stats = NormalizationStats{}) {
  config.validate();
  ScoreModel model;
  model.config = config;
  model.stats = stats.dims() ? std::move(stats)
                             : NormalizationStats::identity(config.covariate_count);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto rows = static_cast<Eigen::Index>(config.vocab_size + 1);
  const auto m = static_cast<Eigen::Index>(config.embedding_dim);
  model.embedding = Matrix::Zero(rows, m);
  for (Eigen::Index r = 1; r < rows; ++r)
    for (Eigen::Index c = 0; c < m; ++c) model.embedding(r, c) = normal(rng);

  std::size_t fan_in = config.input_width();
  auto widths = config.hidden_sizes;
  widths.push_back(2);
  for (std::size_t out : widths) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uni(-bound, bound);
    DenseLayer layer{Matrix(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in)),
                     Vector(static_cast<Eigen::Index>(out))};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = uni(rng);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = uni(rng);
    model.layers.push_back(std::move(layer));
    fan_in = out;
  }
  return model;
}

/// Throws when the layer shapes disagree with the config.
inline void check_shapes(const ScoreModel& model) {
  const auto& c = model.config;
  if (static_cast<std::size_t>(model.embedding.rows()) != c.vocab_size + 1 ||
      static_cast<std::size_t>(model.embedding.cols()) != c.embedding_dim)
    throw ModelFormatError("embedding shape does not match config");
  if (model.layers.empty()) throw ModelFormatError("model has no layers");
  std::size_t in = c.input_width();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    if (static_cast<std::size_t>(l.weight.cols()) != in || l.bias.size() != l.weight.rows())
      throw ModelFormatError("layer " + std::to_string(i) + " shape mismatch");
    in = static_cast<std::size_t>(l.weight.rows());
  }
  if (in != 2) throw ModelFormatError("output layer must have 2 units");
  if (model.stats.dims() != c.covariate_count)
    throw ModelFormatError("normalization stats do not match covariate_count");
}

inline void check_features(const ModelConfig& c, const FeatureVector& f) {
  if (f.tokens.size() != c.lineup_len || f.covariates.size() != c.covariate_count)
    throw DataError("feature widths (" + std::to_string(f.tokens.size()) + " tokens, " +
                    std::to_string(f.covariates.size()) + " covariates) do not match the model (" +
                    std::to_string(c.lineup_len) + ", " + std::to_string(c.covariate_count) + ")");
  for (auto t : f.tokens)
    if (t < 0 || static_cast<std::size_t>(t) > c.vocab_size)
      throw DataError("token " + std::to_string(t) + " outside the vocabulary");
}

/// Builds the first-layer input vector for one sample.
inline Vector input_vector(const ScoreModel& model, const FeatureVector& f) {
  check_features(model.config, f);
  const auto m = static_cast<Eigen::Index>(model.config.embedding_dim);
  Vector x(static_cast<Eigen::Index>(model.config.input_width()));
  for (std::size_t k = 0; k < f.tokens.size(); ++k)
    x.segment(static_cast<Eigen::Index>(k) * m, m) = model.embedding.row(f.tokens[k]).transpose();
  const auto off = static_cast<Eigen::Index>(model.config.lineup_len) * m;
  for (std::size_t i = 0; i < f.covariates.size(); ++i)
    x(off + static_cast<Eigen::Index>(i)) = f.covariates[i];
  return x;
}

namespace detail {

inline void activate(Matrix& z, Activation a) {
  if (a == Activation::relu) z = z.cwiseMax(0.0);
  else if (a == Activation::tanh) z = z.array().tanh().matrix();
}

/// Multiplies `g` by the activation derivative at pre-activation `pre`.
inline void apply_derivative(Matrix& g, const Matrix& pre, Activation a) {
  if (a == Activation::relu) g = g.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  else if (a == Activation::tanh) g = g.cwiseProduct((1.0 - pre.array().tanh().square()).matrix());
}

}  // namespace detail

/// Dense part of the network applied to first-layer inputs (one per column).
inline Matrix forward_inputs(const ScoreModel& model, const Matrix& x) {
  Matrix a = x;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    if (i + 1 < model.layers.size()) detail::activate(z, model.config.activation);
    a = std::move(z);
  }
  return a;
}

using Output = std::array<double, 2>;

/// Raw outputs (home, away) in scaled target units.
inline Output forward(const ScoreModel& model, const FeatureVector& f) {
  const Matrix y = forward_inputs(model, input_vector(model, f));
  return {y(0, 0), y(1, 0)};
}

/// Gradient of output `which` (0 home, 1 away) with respect to the first-layer input.
inline Vector input_gradient(const ScoreModel& model, const Vector& x, int which) {
  std::vector<Matrix> pre;  // pre-activations of hidden layers
  Matrix a = x;
  for (std::size_t i = 0; i + 1 < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    pre.push_back(z);
    detail::activate(z, model.config.activation);
    a = std::move(z);
  }
  Vector g = model.layers.back().weight.row(which).transpose();
  for (std::size_t i = model.layers.size() - 1; i-- > 0;) {
    Matrix gm = g;
    detail::apply_derivative(gm, pre[i], model.config.activation);
    g = model.layers[i].weight.transpose() * gm;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Loss and gradients

/// One labelled example; `goals` are actual goals (home, away).
struct Sample {
  FeatureVector features;
  std::array<double, 2> goals{};
};

inline Output scaled_target(const Sample& s, double target_scale) {
  return {s.goals[0] / target_scale, s.goals[1] / target_scale};
}

/// Squared error summed over both outputs.
inline double loss(const Output& pred, const Output& target) {
  const double dh = pred[0] - target[0];
  const double da = pred[1] - target[1];
  return dh * dh + da * da;
}

/// Mean per-sample loss.
inline double loss(std::span<const Output> preds, std::span<const Output> targets) {
  if (preds.size() != targets.size()) throw DataError("prediction/target count mismatch");
  if (preds.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += loss(preds[i], targets[i]);
  return s / static_cast<double>(preds.size());
}

struct Gradients {
  Matrix embedding;
  std::vector<DenseLayer> layers;
  double loss = 0.0;
};

namespace detail {

inline Matrix batch_inputs(const ScoreModel& model, std::span<const Sample> batch) {
  Matrix x(static_cast<Eigen::Index>(model.config.input_width()),
           static_cast<Eigen::Index>(batch.size()));
  for (std::size_t s = 0; s < batch.size(); ++s)
    x.col(static_cast<Eigen::Index>(s)) = input_vector(model, batch[s].features);
  return x;
}

inline Matrix batch_targets(const ScoreModel& model, std::span<const Sample> batch) {
  Matrix t(2, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto tgt = scaled_target(batch[s], model.stats.target_scale);
    t(0, static_cast<Eigen::Index>(s)) = tgt[0];
    t(1, static_cast<Eigen::Index>(s)) = tgt[1];
  }
  return t;
}

}  // namespace detail

/// Mean loss over `samples`.
inline double dataset_loss(const ScoreModel& model, std::span<const Sample> samples,
                           std::size_t chunk = 256) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const auto part = samples.subspan(start, std::min(chunk, samples.size() - start));
    const Matrix diff = forward_inputs(model, detail::batch_inputs(model, part)) -
                        detail::batch_targets(model, part);
    total += diff.squaredNorm();
  }
  return total / static_cast<double>(samples.size());
}

/// Exact gradients of the mean batch loss. Embedding rows not referenced by
/// the batch get zero gradient. Row 0 gets its true gradient too; the
/// optimizer is responsible for keeping it frozen.
inline Gradients gradients(const ScoreModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw DataError("gradient batch is empty");
  const auto n = static_cast<double>(batch.size());
  const Matrix x = detail::batch_inputs(model, batch);

  std::vector<Matrix> acts{x};  // inputs to each layer
  std::vector<Matrix> pre;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    Matrix z = l.weight * acts.back();
    z.colwise() += l.bias;
    pre.push_back(z);
    if (i + 1 < model.layers.size()) detail::activate(z, model.config.activation);
    acts.push_back(std::move(z));
  }
  const Matrix diff = acts.back() - detail::batch_targets(model, batch);

  Gradients g;
  g.loss = diff.squaredNorm() / n;
  g.layers.resize(model.layers.size());
  Matrix delta = (2.0 / n) * diff;  // dL/dz for the output layer
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    g.layers[i].weight = delta * acts[i].transpose();
    g.layers[i].bias = delta.rowwise().sum();
    delta = model.layers[i].weight.transpose() * delta;
    if (i > 0) detail::apply_derivative(delta, pre[i - 1], model.config.activation);
  }

  const auto m = static_cast<Eigen::Index>(model.config.embedding_dim);
  g.embedding = Matrix::Zero(model.embedding.rows(), model.embedding.cols());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& tokens = batch[s].features.tokens;
    for (std::size_t k = 0; k < tokens.size(); ++k)
      g.embedding.row(tokens[k]) +=
          delta.col(static_cast<Eigen::Index>(s)).segment(static_cast<Eigen::Index>(k) * m, m).transpose();
  }
  return g;
}

// ---------------------------------------------------------------------------
// Prediction and evaluation

struct ScorePrediction {
  int home = 0;
  int away = 0;
  double raw_home = 0.0;  // goal units, unrounded and unclamped
  double raw_away = 0.0;
};

/// Clamp at zero, then round half up.
inline int round_goals(double raw) {
  return static_cast<int>(std::floor(std::max(raw, 0.0) + 0.5));
}

inline ScorePrediction descale(const Output& raw, double target_scale) {
  ScorePrediction p;
  p.raw_home = raw[0] * target_scale;
  p.raw_away = raw[1] * target_scale;
  p.home = round_goals(p.raw_home);
  p.away = round_goals(p.raw_away);
  return p;
}

inline ScorePrediction predict_score(const ScoreModel& model, const FeatureVector& f) {
  return descale(forward(model, f), model.stats.target_scale);
}

struct Metrics {
  double rmse_home = 0.0;
  double mape_home = 0.0;  // fraction
  double rmse_away = 0.0;
  double mape_away = 0.0;
  std::size_t count = 0;
  std::size_t mape_skipped_home = 0;  // matches with 0 actual goals
  std::size_t mape_skipped_away = 0;
};

/// RMSE and MAPE from unrounded predictions in goal units.
inline Metrics evaluate_predictions(std::span<const std::array<double, 2>> predicted,
                                    std::span<const std::array<double, 2>> actual) {
  if (predicted.empty()) throw DataError("cannot evaluate an empty test set");
  if (predicted.size() != actual.size()) throw DataError("prediction/actual count mismatch");
  Metrics out;
  out.count = predicted.size();
  std::array<double, 2> se{};
  std::array<double, 2> ape{};
  std::array<std::size_t, 2> used{};
  std::array<std::size_t, 2> skipped{};
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (int k = 0; k < 2; ++k) {
      const double err = predicted[i][k] - actual[i][k];
      se[k] += err * err;
      if (actual[i][k] == 0.0) {
        ++skipped[k];
      } else {
        ape[k] += std::abs(err) / std::abs(actual[i][k]);
        ++used[k];
      }
    }
  }
  const double n = static_cast<double>(predicted.size());
  out.rmse_home = std::sqrt(se[0] / n);
  out.rmse_away = std::sqrt(se[1] / n);
  out.mape_home = used[0] ? ape[0] / static_cast<double>(used[0]) : 0.0;
  out.mape_away = used[1] ? ape[1] / static_cast<double>(used[1]) : 0.0;
  out.mape_skipped_home = skipped[0];
  out.mape_skipped_away = skipped[1];
  return out;
}

inline Metrics evaluate(const ScoreModel& model, std::span<const Sample> test) {
  if (test.empty()) throw DataError("cannot evaluate an empty test set");
  std::vector<std::array<double, 2>> pred;
  std::vector<std::array<double, 2>> actual;
  pred.reserve(test.size());
  actual.reserve(test.size());
  for (const auto& s : test) {
    const auto p = predict_score(model, s.features);
    pred.push_back({p.raw_home, p.raw_away});
    actual.push_back(s.goals);
  }
  return evaluate_predictions(pred, actual);
}

// ---------------------------------------------------------------------------
// Transfer

/// Copies embedding rows of players known to both vocabularies (exact name
/// match) from the clubs model into the national model. Dense layers and the
/// rows of national-only players are left as initialized.
inline ScoreModel transfer_init(ScoreModel national, const ScoreModel& clubs,
                                const PlayerVocabulary& clubs_vocab,
                                const PlayerVocabulary& national_vocab) {
  if (national.config.embedding_dim != clubs.config.embedding_dim)
    throw ConfigError("embedding_dim mismatch: national " +
                      std::to_string(national.config.embedding_dim) + ", clubs " +
                      std::to_string(clubs.config.embedding_dim));
  if (national_vocab.size() != national.config.vocab_size ||
      clubs_vocab.size() != clubs.config.vocab_size)
    throw ConfigError("vocabulary sizes do not match the models");
  for (std::size_t id = 1; id <= national_vocab.size(); ++id) {
    const auto tid = static_cast<TokenId>(id);
    if (auto src = clubs_vocab.find(national_vocab.name(tid)))
      national.embedding.row(tid) = clubs.embedding.row(*src);
  }
  return national;
}

}  // namespace hbo
