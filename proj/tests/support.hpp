#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hbo/features.hpp"
#include "hbo/ingest.hpp"
#include "hbo/model.hpp"
#include "hbo/train.hpp"

namespace hbo::test {

inline RawMatch make_match(std::string id, std::string when, std::string home, std::string away,
                           std::vector<std::string> home_lineup = {},
                           std::vector<std::string> away_lineup = {},
                           std::optional<int> hg = std::nullopt, std::optional<int> ag = std::nullopt) {
  RawMatch m;
  m.match_id = std::move(id);
  m.date_time = *DateTime::parse(when);
  m.competition = "Regular championships";
  m.home_team = std::move(home);
  m.away_team = std::move(away);
  m.home_location = {48.8566, 2.3522};
  m.away_location = {45.8150, 15.9819};
  m.match_location = m.home_location;
  m.home_lineup = std::move(home_lineup);
  m.away_lineup = std::move(away_lineup);
  m.home_goals = hg;
  m.away_goals = ag;
  m.season = when.substr(0, 4);
  return m;
}

/// Per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hbo_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Dense forward pass written as explicit loops over the stored weights.
inline std::array<double, 2> oracle_forward(const ScoreModel& model, const FeatureVector& f) {
  const auto m = static_cast<std::size_t>(model.config.embedding_dim);
  std::vector<double> a;
  for (TokenId t : f.tokens)
    for (std::size_t c = 0; c < m; ++c) a.push_back(model.embedding(t, static_cast<Eigen::Index>(c)));
  for (double c : f.covariates) a.push_back(c);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& W = model.layers[l].weight;
    const auto& b = model.layers[l].bias;
    std::vector<double> z(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      double s = b(i);
      for (Eigen::Index j = 0; j < W.cols(); ++j) s += W(i, j) * a[static_cast<std::size_t>(j)];
      const bool hidden = l + 1 < model.layers.size();
      if (hidden && model.config.activation == Activation::relu) s = std::max(0.0, s);
      if (hidden && model.config.activation == Activation::tanh) s = std::tanh(s);
      z[static_cast<std::size_t>(i)] = s;
    }
    a = std::move(z);
  }
  return {a[0], a[1]};
}

/// Small random model and matching random features.
inline ScoreModel small_model(std::uint64_t seed, std::size_t vocab = 5, std::size_t m = 2,
                              std::size_t lineup = 4, std::size_t cov = 3,
                              std::vector<std::size_t> hidden = {8, 4}) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.embedding_dim = m;
  c.lineup_len = lineup;
  c.covariate_count = cov;
  c.hidden_sizes = std::move(hidden);
  c.seed = seed;
  return init_model(c);
}

inline FeatureVector random_features(const ModelConfig& c, std::mt19937_64& rng, bool allow_null = true) {
  std::uniform_int_distribution<int> tok(allow_null ? 0 : 1, static_cast<int>(c.vocab_size));
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureVector f;
  for (std::size_t i = 0; i < c.lineup_len; ++i) f.tokens.push_back(tok(rng));
  for (std::size_t i = 0; i < c.covariate_count; ++i) f.covariates.push_back(n(rng));
  return f;
}

inline std::vector<Sample> random_batch(const ModelConfig& c, std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> goals(15.0, 40.0);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({random_features(c, rng), {goals(rng), goals(rng)}});
  return out;
}

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6), maximised over every
// parameter, with central differences of step h on the mean batch loss.
inline double max_gradient_relative_error(const ScoreModel& model, const std::vector<Sample>& batch,
                                          double h = 1e-5) {
  const Gradients g = gradients(model, batch);
  ScoreModel probe = model;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = dataset_loss(probe, batch);
    param = saved - h;
    const double down = dataset_loss(probe, batch);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (Eigen::Index r = 0; r < probe.embedding.rows(); ++r)
    for (Eigen::Index c = 0; c < probe.embedding.cols(); ++c) check(probe.embedding(r, c), g.embedding(r, c));
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) check(layer.weight(r, c), g.layers[l].weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) check(layer.bias(r), g.layers[l].bias(r));
  }
  return worst;
}

// Small ReLU model fitted for a few epochs on random data.
inline ScoreModel toy_trained_model(std::uint64_t seed = 21, Activation act = Activation::relu) {
  std::mt19937_64 rng(seed);
  auto m = small_model(seed, 12, 3, 8, 5, {16, 8});
  m.config.activation = act;
  m.config.max_epochs = 30;
  m.config.patience = 30;
  m.config.learning_rate = 5e-3;
  m.config.batch_size = 8;
  const auto data = random_batch(m.config, rng, 64);
  return train(m, data, data).first;
}

// Effective weight row of a model whose hidden activations are the identity.
inline Vector linear_weights(const ScoreModel& model, int which) {
  Matrix w = model.layers.back().weight.row(which);
  for (std::size_t l = model.layers.size() - 1; l-- > 0;) w = w * model.layers[l].weight;
  return w.transpose();
}

// A run whose validation loss improves at epoch 2 and worsens at epoch 3.
// The training trajectory is probed first with fixed epoch budgets; the
// validation target is then placed 40% of the way from the epoch-2 output to
// the epoch-3 output.
struct EarlyStopScenario {
  ScoreModel init;
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::array<ScoreModel, 3> probes;  // weights after 1, 2, 3 epochs
};

inline EarlyStopScenario make_early_stop_scenario(std::uint64_t seed = 7) {
  EarlyStopScenario s;
  s.init = small_model(seed, 5, 2, 4, 3, {8, 4});
  s.init.config.learning_rate = 1e-2;
  s.init.config.batch_size = 4;
  s.init.config.patience = 1000;
  const FeatureVector x{{0.3, -0.4, 0.5}, {1, 2, 3, 4}};
  for (int i = 0; i < 8; ++i) s.train.push_back({x, {30.0, 25.0}});
  // validating on the training target keeps every epoch "best", so each probe holds its last weights
  s.validation.push_back({x, {30.0, 25.0}});
  for (std::size_t k = 1; k <= 3; ++k) {
    auto m = s.init;
    m.config.max_epochs = k;
    s.probes[k - 1] = train(m, s.train, s.validation).first;
  }
  const auto p2 = forward(s.probes[1], x);
  const auto p3 = forward(s.probes[2], x);
  const double scale = s.init.stats.target_scale;
  for (int k = 0; k < 2; ++k)
    s.validation[0].goals[k] = (p2[k] + 0.4 * (p3[k] - p2[k])) * scale;
  s.init.config.patience = 1;
  s.init.config.max_epochs = 100;
  return s;
}

}  // namespace hbo::test
