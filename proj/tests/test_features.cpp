#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hbo/features.hpp"
#include "hbo/geo.hpp"
#include "support.hpp"

using namespace hbo;
using hbo::test::make_match;

namespace {

// Haversine via the atan2 form, evaluated independently of the library.
double oracle_distance(double lat1, double lon1, double lat2, double lon2) {
  const double r = 6371.0;
  const double d = 3.14159265358979323846 / 180.0;
  const double a = std::pow(std::sin((lat2 - lat1) * d / 2), 2) +
                   std::cos(lat1 * d) * std::cos(lat2 * d) * std::pow(std::sin((lon2 - lon1) * d / 2), 2);
  return 2 * r * std::atan2(std::sqrt(a), std::sqrt(1 - a));
}

}  // namespace

TEST(TravelDistance, KnownValues) {
  const GeoPoint paris{48.8566, 2.3522};
  const GeoPoint zagreb{45.8150, 15.9819};
  EXPECT_EQ(travel_distance(paris, paris), 0.0);
  // Frozen from an arbitrary-precision evaluation of the haversine formula.
  EXPECT_NEAR(travel_distance(paris, zagreb), 1079.576882962257, 1e-9);
  EXPECT_NEAR(travel_distance({0, 0}, {0, 180}), 20015.0867960206, 1e-7);
  EXPECT_NEAR(travel_distance({90, 0}, {-90, 0}), 6371.0 * 3.14159265358979323846, 1e-7);
}

TEST(TravelDistance, AgreesWithOracleSymmetricAndTriangle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  for (int i = 0; i < 500; ++i) {
    const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)}, c{lat(rng), lon(rng)};
    const double ab = travel_distance(a, b);
    EXPECT_NEAR(ab, oracle_distance(a.lat, a.lon, b.lat, b.lon), 1e-6);
    EXPECT_NEAR(ab, travel_distance(b, a), 1e-9);
    EXPECT_LE(ab, travel_distance(a, c) + travel_distance(c, b) + 1e-9);
  }
}

TEST(TravelDistance, RejectsInvalidCoordinates) {
  EXPECT_THROW(travel_distance({91, 0}, {0, 0}), DataError);
  EXPECT_THROW(travel_distance({0, 0}, {0, 181}), DataError);
}

TEST(Vocabulary, FirstAppearanceOrder) {
  Dataset d;
  d.matches = {make_match("1", "2023-01-01T18:00", "A", "B", {"A B", "C D"}, {"E F"}),
               make_match("2", "2023-01-02T18:00", "B", "A", {"E F", "G H"}, {"C D"})};
  const auto v = build_vocabulary(d);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(*v.find("A B"), 1);
  EXPECT_EQ(*v.find("C D"), 2);
  EXPECT_EQ(*v.find("E F"), 3);
  EXPECT_EQ(*v.find("G H"), 4);
  EXPECT_EQ(v.meta(1).team, "A");
  EXPECT_EQ(build_vocabulary(Dataset{}).size(), 0u);
  EXPECT_EQ(build_vocabulary(d), v);
  EXPECT_THROW(v.meta(0), DataError);
  EXPECT_EQ(PlayerVocabulary::from_json(v.to_json()), v);
}

TEST(EncodeLineup, SlotsPaddingAndUnknowns) {
  PlayerVocabulary v;
  std::vector<std::string> home, away;
  for (int i = 0; i < 16; ++i) home.push_back("H" + std::to_string(i)), v.add(home.back());
  for (int i = 0; i < 16; ++i) away.push_back("A" + std::to_string(i)), v.add(away.back());
  const auto full = encode_lineup(v, home, away);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_EQ(full[i], static_cast<TokenId>(i + 1));

  const auto empty = encode_lineup(v, {}, {});
  for (auto t : empty) EXPECT_EQ(t, 0);

  const auto partial = encode_lineup(v, {"H3", "Z Z"}, {"A0"});
  EXPECT_EQ(partial[0], 4);
  EXPECT_EQ(partial[1], 0);
  EXPECT_EQ(partial[16], 17);
  EXPECT_EQ(partial[17], 0);

  home.push_back("extra");
  EXPECT_THROW(encode_lineup(v, home, {}), DataError);
}

TEST(Importance, TableValues) {
  EXPECT_EQ(importance_value("Olympic Games", Category::national), 10);
  EXPECT_EQ(importance_value("EHF Champions League", Category::clubs), 6);
  EXPECT_EQ(importance_value("Friendly games", Category::clubs), 1);
  EXPECT_EQ(importance_value("olympic games", Category::national), 10);
  try {
    importance_value("Beach Cup", Category::clubs);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("EHF Champions League"), std::string::npos);
  }
}

TEST(Strengths, BaselineWindowAndFallback) {
  Dataset d;
  d.matches = {make_match("1", "2023-01-01T18:00", "A", "B", {}, {}, 30, 20),
               make_match("2", "2023-01-02T18:00", "C", "A", {}, {}, 25, 32),
               make_match("3", "2023-01-03T18:00", "A", "C", {}, {}, 28, 24)};
  const auto s = baseline_strengths(d, "A", 3);
  EXPECT_DOUBLE_EQ(s.attack, 30.0);
  EXPECT_DOUBLE_EQ(s.defense, (20 + 25 + 24) / 3.0);
  const auto last = baseline_strengths(d, "A", 1);
  EXPECT_DOUBLE_EQ(last.attack, 28.0);
  EXPECT_DOUBLE_EQ(last.defense, 24.0);
  const auto none = baseline_strengths(d, "Z", 3);
  EXPECT_DOUBLE_EQ(none.attack, (30 + 20 + 25 + 32 + 28 + 24) / 6.0);
  EXPECT_DOUBLE_EQ(none.defense, none.attack);
  EXPECT_THROW(baseline_strengths(d, "A", 0), ConfigError);
}

TEST(Strengths, HistoryIsCausal) {
  Dataset d;
  d.matches = {make_match("1", "2023-01-01T18:00", "A", "B", {}, {}, 30, 20),
               make_match("2", "2023-01-02T18:00", "A", "B", {}, {}, 20, 30)};
  const HistoryStrengths h(d, 5);
  const auto before_second = h.strengths("A", d.matches[1].date_time);
  EXPECT_DOUBLE_EQ(before_second.attack, 30.0);
  const auto first = h.strengths("A", d.matches[0].date_time);
  EXPECT_DOUBLE_EQ(first.attack, 0.0);  // nothing known yet
  EXPECT_DOUBLE_EQ(h.snapshot().at("A").attack, 25.0);
}

TEST(Covariates, EncodingRules) {
  PlayerVocabulary v;
  const TableStrengths strengths({}, {27.0, 26.0});
  const FeatureAssembler fa(v, strengths);
  auto m = make_match("1", "2023-01-02T13:30", "A", "B");  // a Monday
  const auto c = fa.covariates(m);
  EXPECT_EQ(c.day_of_week, 0);
  EXPECT_EQ(c.hour, 13);
  EXPECT_EQ(c.travel_distance_home, 0.0);
  EXPECT_NEAR(c.travel_distance_away, 1079.576882962257, 1e-9);
  EXPECT_EQ(c.importance, 3);
  EXPECT_EQ(c.attack_home, 27.0);

  auto final = make_match("f", "2024-08-11T13:30", "France", "Croatia");
  final.category = Category::national;
  final.competition = "Olympic Games";
  final.attack_home = 1.5;
  const auto fc = fa.covariates(final);
  EXPECT_EQ(fc.importance, 10);
  EXPECT_EQ(fc.hour, 13);
  EXPECT_EQ(fc.attack_home, 1.5);
  EXPECT_EQ(fc.defense_home, 26.0);
}

TEST(Covariates, ClubCounts) {
  Roster r;
  r.add("p1", {"goalkeeper", "Club X", "N"});
  r.add("p2", {"left wing", "Club Y", "N"});
  r.add("p3", {"pivot", "Club X", "N"});
  EXPECT_EQ(count_clubs({"p1", "p2", "p3", "stranger"}, &r), 2);
  EXPECT_EQ(count_clubs({"stranger"}, &r), 1);
  EXPECT_EQ(count_clubs({"p1"}, nullptr), 1);

  PlayerVocabulary v;
  const TableStrengths s;
  const FeatureAssembler fa(v, s, &r);
  auto m = make_match("1", "2023-01-02T13:30", "A", "B", {"p1", "p2"}, {"p3"});
  EXPECT_EQ(fa.covariates(m).n_clubs_home, 1);  // clubs matches always 1
  m.category = Category::national;
  m.competition = "Olympic Games";
  EXPECT_EQ(fa.covariates(m).n_clubs_home, 2);
  EXPECT_EQ(fa.covariates(m).n_clubs_away, 1);
}

TEST(Normalization, FitRules) {
  const auto single = fit_normalization({{3.0, -1.0}});
  EXPECT_EQ(single.mean, (std::vector<double>{3.0, -1.0}));
  EXPECT_EQ(single.stddev, (std::vector<double>{1.0, 1.0}));
  const auto two = fit_normalization({{0.0, 5.0}, {2.0, 5.0}});
  EXPECT_DOUBLE_EQ(two.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(two.stddev[0], 1.0);
  EXPECT_DOUBLE_EQ(two.stddev[1], 1.0);
  EXPECT_THROW(fit_normalization({}), DataError);
}

TEST(Normalization, StandardizedTrainingSetProperties) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i) rows.push_back({100 + 30 * n(rng), -2 + 0.01 * n(rng), 7.0});
    const auto s = fit_normalization(rows);
    std::vector<double> mean(3, 0.0), sq(3, 0.0);
    for (const auto& r : rows) {
      const auto z = s.standardize(r);
      const auto back = s.destandardize(z);
      for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(back[k], r[k], 1e-12 * std::max(1.0, std::abs(r[k])));
        mean[k] += z[k] / 50;
        sq[k] += z[k] * z[k] / 50;
      }
    }
    for (int k = 0; k < 2; ++k) {
      EXPECT_LT(std::abs(mean[k]), 1e-9);
      EXPECT_NEAR(std::sqrt(sq[k] - mean[k] * mean[k]), 1.0, 1e-9);
    }
    EXPECT_EQ(s.stddev[2], 1.0);
  }
}

TEST(Assemble, StandardizesCovariatesOnly) {
  PlayerVocabulary v;
  v.add("p1");
  const TableStrengths s({}, {27.0, 26.0});
  const FeatureAssembler fa(v, s);
  const auto m = make_match("1", "2023-01-02T13:30", "A", "B", {"p1"}, {});
  const auto raw = fa.assemble(m);
  const auto stats = fit_normalization({raw.covariates, std::vector<double>(11, 0.0)});
  const auto z = fa.assemble(m, &stats);
  EXPECT_EQ(z.tokens, raw.tokens);
  EXPECT_EQ(z.tokens.size(), 32u);
  EXPECT_EQ(z.tokens[0], 1);
  EXPECT_EQ(z.covariates, stats.standardize(raw.covariates));
}
