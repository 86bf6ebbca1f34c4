#include <random>

#include <gtest/gtest.h>

#include "hbo/train.hpp"
#include "support.hpp"

using namespace hbo;
using namespace hbo::test;

TEST(EarlyStopping, ReturnsBestEpochWeights) {
  const auto s = make_early_stop_scenario();
  const auto v1 = dataset_loss(s.probes[0], s.validation);
  const auto v2 = dataset_loss(s.probes[1], s.validation);
  const auto v3 = dataset_loss(s.probes[2], s.validation);
  ASSERT_LT(v2, v1);
  ASSERT_GT(v3, v2);

  std::vector<std::size_t> seen;
  const auto [model, history] =
      train(s.init, s.train, s.validation, [&](std::size_t e, const EpochLoss&) { seen.push_back(e); });
  EXPECT_EQ(history.epochs.size(), 3u);
  EXPECT_EQ(history.best_epoch, 2u);
  EXPECT_TRUE(history.stopped_early);
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_TRUE(model.embedding == s.probes[1].embedding);
  EXPECT_TRUE(model.layers == s.probes[1].layers);
  EXPECT_DOUBLE_EQ(history.best_validation_loss(), v2);
}

TEST(EarlyStopping, PatienceZeroStopsAfterFirstEpoch) {
  auto s = make_early_stop_scenario();
  s.init.config.patience = 0;
  const auto [model, history] = train(s.init, s.train, s.validation);
  EXPECT_EQ(history.epochs.size(), 1u);
  EXPECT_EQ(history.best_epoch, 1u);
}

TEST(EarlyStopping, LargerPatienceRunsLonger) {
  auto s = make_early_stop_scenario();
  s.init.config.patience = 3;
  const auto [model, history] = train(s.init, s.train, s.validation);
  EXPECT_GE(history.epochs.size(), 5u);
  EXPECT_EQ(history.best_epoch, 2u);
  EXPECT_TRUE(model.layers == s.probes[1].layers);
}

TEST(Training, DeterministicInSeed) {
  std::mt19937_64 rng(4);
  auto m = small_model(11);
  m.config.max_epochs = 5;
  m.config.batch_size = 3;
  const auto tr = random_batch(m.config, rng, 20);
  const auto va = random_batch(m.config, rng, 5);
  const auto a = train(m, tr, va);
  const auto b = train(m, tr, va);
  EXPECT_TRUE(a.first.embedding == b.first.embedding);
  EXPECT_TRUE(a.first.layers == b.first.layers);
  for (std::size_t e = 0; e < a.second.epochs.size(); ++e)
    EXPECT_EQ(a.second.epochs[e].validation_loss, b.second.epochs[e].validation_loss);
}

TEST(Training, NullRowStaysZeroAndLossFalls) {
  std::mt19937_64 rng(5);
  auto m = small_model(12, 5, 2, 4, 3, {16, 8});
  m.config.max_epochs = 60;
  m.config.patience = 60;
  m.config.learning_rate = 5e-3;
  m.config.batch_size = 8;
  const auto tr = random_batch(m.config, rng, 40);
  const auto [model, history] = train(m, tr, tr);
  EXPECT_TRUE(model.embedding.row(0).isZero(0.0));
  EXPECT_LT(history.epochs.back().train_loss, history.epochs.front().train_loss);
}

TEST(Training, RejectsEmptySets) {
  auto m = small_model(1);
  std::mt19937_64 rng(1);
  const auto tr = random_batch(m.config, rng, 3);
  EXPECT_THROW(train(m, {}, tr), DataError);
  EXPECT_THROW(train(m, tr, {}), DataError);
}
