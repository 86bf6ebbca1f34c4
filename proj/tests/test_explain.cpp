#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hbo/explain.hpp"
#include "support.hpp"

using namespace hbo;
using namespace hbo::test;

TEST(IntegratedGradients, LinearModelIsExactAtOneStep) {
  std::mt19937_64 rng(8);
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto c = small_model(s).config;
    c.activation = Activation::identity;
    const auto model = init_model(c);
    const auto f = random_features(c, rng);
    const auto base = default_baseline(model);
    for (int which = 0; which < 2; ++which) {
      const auto side = which == 0 ? TeamSide::home : TeamSide::away;
      const auto raw = integrated_gradients(model, f, side, 1, base);
      const Vector w = linear_weights(model, which);
      const Vector dx = input_vector(model, f) - input_vector(model, base);
      const auto m = static_cast<Eigen::Index>(c.embedding_dim);
      for (std::size_t k = 0; k < c.lineup_len; ++k) {
        double expect = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
          const auto idx = static_cast<Eigen::Index>(k) * m + j;
          expect += w(idx) * dx(idx);
        }
        EXPECT_NEAR(raw.tokens[k], expect, 1e-10);
      }
      const auto off = static_cast<Eigen::Index>(c.lineup_len) * m;
      for (std::size_t i = 0; i < c.covariate_count; ++i) {
        const auto idx = off + static_cast<Eigen::Index>(i);
        EXPECT_NEAR(raw.covariates[i], w(idx) * dx(idx), 1e-10);
      }
      EXPECT_LT(raw.residual(), 1e-10);
    }
  }
}

TEST(IntegratedGradients, CompletenessOnSmoothModel) {
  const auto model = toy_trained_model(21, Activation::tanh);
  std::mt19937_64 rng(30);
  const auto base = default_baseline(model);
  for (int i = 0; i < 10; ++i) {
    const auto f = random_features(model.config, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (int steps : {50, 100, 200}) {
      const auto raw = integrated_gradients(model, f, TeamSide::home, steps, base);
      const double gap = raw.input_output - raw.baseline_output;
      EXPECT_LE(raw.residual(), prev + 1e-12);
      prev = raw.residual();
      if (steps == 200) EXPECT_LT(raw.residual(), 1e-3 * std::max(1.0, std::abs(gap)));
    }
  }
}

// ReLU gradients jump along the path, so only the bound is checked here.
TEST(IntegratedGradients, CompletenessOnReluModel) {
  const auto model = toy_trained_model();
  std::mt19937_64 rng(30);
  const auto base = default_baseline(model);
  for (int i = 0; i < 10; ++i) {
    const auto f = random_features(model.config, rng);
    const auto raw = integrated_gradients(model, f, TeamSide::home, 200, base);
    EXPECT_LT(raw.residual(), 1e-3 * std::max(1.0, std::abs(raw.input_output - raw.baseline_output)));
  }
}

TEST(IntegratedGradients, NullSlotsAndEqualInputsGetZero) {
  const auto model = toy_trained_model();
  const auto base = default_baseline(model);
  const auto raw = integrated_gradients(model, base, TeamSide::away, 20, base);
  for (double v : raw.tokens) EXPECT_EQ(v, 0.0);
  for (double v : raw.covariates) EXPECT_EQ(v, 0.0);

  FeatureVector f = base;
  f.tokens[0] = 3;
  f.covariates[1] = 0.7;
  const auto r2 = integrated_gradients(model, f, TeamSide::home, 20, base);
  for (std::size_t k = 1; k < r2.tokens.size(); ++k) EXPECT_EQ(r2.tokens[k], 0.0);
  EXPECT_EQ(r2.covariates[0], 0.0);
}

TEST(IntegratedGradients, OutputsMatchForward) {
  const auto model = toy_trained_model();
  std::mt19937_64 rng(2);
  const auto f = random_features(model.config, rng);
  const auto raw = integrated_gradients(model, f, TeamSide::away, 10, default_baseline(model));
  EXPECT_DOUBLE_EQ(raw.input_output, forward(model, f)[1]);
  EXPECT_DOUBLE_EQ(raw.baseline_output, forward(model, default_baseline(model))[1]);
}

TEST(IntegratedGradients, RejectsBadArguments) {
  const auto model = toy_trained_model();
  const auto base = default_baseline(model);
  EXPECT_THROW(integrated_gradients(model, base, TeamSide::home, 0, base), ConfigError);
  FeatureVector shorter = base;
  shorter.tokens.pop_back();
  EXPECT_THROW(integrated_gradients(model, base, TeamSide::home, 5, shorter), DataError);
}

TEST(Path, QuadraticIsExactUnderMidpointRule) {
  // F(x) = x^2 / 2, gradient x; the midpoint rule integrates linear gradients exactly.
  Vector x(1), b(1);
  x << 3.0;
  b << 1.0;
  const auto ig = integrated_gradients_path([](const Vector& p) { return p; }, x, b, 1);
  EXPECT_NEAR(ig(0), (9.0 - 1.0) / 2, 1e-15);
}

namespace {

struct NamedFixture {
  ScoreModel model;
  PlayerVocabulary vocab;
  RawMatch match;
  FeatureVector features;
};

NamedFixture named_fixture() {
  NamedFixture n;
  std::vector<std::string> home, away;
  for (int i = 0; i < 14; ++i) home.push_back("Home Player " + std::to_string(i));
  for (int i = 0; i < 15; ++i) away.push_back("Away, Player " + std::to_string(i));
  n.match = make_match("m1", "2024-08-11T13:30", "France", "Croatia", home, away);
  Dataset d;
  d.matches = {n.match};
  n.vocab = build_vocabulary(d);
  ModelConfig c;
  c.vocab_size = n.vocab.size();
  c.embedding_dim = 3;
  c.hidden_sizes = {8};
  c.seed = 4;
  n.model = init_model(c);
  const TableStrengths s({}, {27.0, 27.0});
  n.features = FeatureAssembler(n.vocab, s).assemble(n.match);
  return n;
}

}  // namespace

TEST(Report, NamesEverySlotAndSorts) {
  const auto n = named_fixture();
  const auto raw = integrated_gradients(n.model, n.features, TeamSide::home, 50, default_baseline(n.model));
  const auto r = build_report(raw, n.features, n.vocab, nullptr, n.match, TeamSide::home);
  ASSERT_EQ(r.entries.size(), 43u);
  for (std::size_t i = 1; i < r.entries.size(); ++i)
    EXPECT_GE(r.entries[i - 1].attribution, r.entries[i].attribution);
  std::set<std::size_t> slots;
  int empty = 0;
  for (const auto& e : r.entries) {
    slots.insert(e.slot);
    if (e.empty_slot) ++empty;
    if (e.is_player && !e.empty_slot)
      EXPECT_EQ(e.team, e.slot < 16 ? "France" : "Croatia");
  }
  EXPECT_EQ(slots.size(), 43u);
  EXPECT_EQ(empty, 3);
  EXPECT_NEAR(r.residual(), raw.residual(), 1e-12);
}

TEST(Report, CsvAndJsonExport) {
  const auto n = named_fixture();
  const auto raw = integrated_gradients(n.model, n.features, TeamSide::away, 30, default_baseline(n.model));
  const auto r = build_report(raw, n.features, n.vocab, nullptr, n.match, TeamSide::away);
  const auto dir = scratch_dir("explain_csv");
  export_attributions(r, dir / "a.csv");
  std::ifstream in(dir / "a.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 44u);
  const auto back = read_attributions(dir / "a.csv");
  ASSERT_EQ(back.size(), r.entries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].first, r.entries[i].attribution);
    EXPECT_EQ(back[i].second, r.entries[i].name);
  }
  const auto j = report_to_json(r);
  EXPECT_EQ(j.at("team_explained"), "away");
  EXPECT_EQ(j.at("entries").size(), 43u);
}

TEST(Report, LabelsIncludePositionAndTeam) {
  AttributionEntry e{"Dika Mem", 0.1, 0, true, false, "right back", "France"};
  EXPECT_EQ(e.label(), "Dika Mem (right back, France)");
  e.position.clear();
  EXPECT_EQ(e.label(), "Dika Mem (France)");
  AttributionEntry c{"hour", 0.2, 33};
  EXPECT_EQ(c.label(), "hour");
}
