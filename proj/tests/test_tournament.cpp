#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hbo/features.hpp"
#include "hbo/tournament.hpp"

using namespace hbo;

namespace {

const std::filesystem::path kData = HBO_DATA_DIR;

MatchScore from_table(const TableScorer& t, const std::string& a, const std::string& b) { return t(a, b); }

Bracket men_bracket() {
  Bracket b;
  b.quarterfinals = {Pairing{"Croatia", "Hungary"}, Pairing{"Norway", "Spain"},
                     Pairing{"Germany", "France"}, Pairing{"Denmark", "Sweden"}};
  return b;
}

TableScorer men_knockout_scores() {
  TableScorer t;
  t.add("Croatia", "Hungary", 34, 24);
  t.add("Norway", "Spain", 31, 32);
  t.add("Germany", "France", 28, 32);
  t.add("Denmark", "Sweden", 27, 23);
  t.add("Croatia", "Spain", 33, 30);
  t.add("France", "Denmark", 33, 28);
  t.add("France", "Croatia", 35, 24);
  t.add("Spain", "Denmark", 29, 30);
  return t;
}

}  // namespace

TEST(RoundRobin, EveryPairOnceAndFiveRounds) {
  const std::vector<std::string> g{"A", "B", "C", "D", "E", "F"};
  const auto fixtures = round_robin(g);
  ASSERT_EQ(fixtures.size(), 15u);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& f : fixtures) pairs.insert(std::minmax(f.home, f.away));
  EXPECT_EQ(pairs.size(), 15u);
  for (std::size_t r = 0; r < 5; ++r) {
    std::set<std::string> teams;
    for (std::size_t i = 0; i < 3; ++i) {
      teams.insert(fixtures[r * 3 + i].home);
      teams.insert(fixtures[r * 3 + i].away);
    }
    EXPECT_EQ(teams.size(), 6u) << "round " << r;
  }
  EXPECT_EQ(round_robin(g), fixtures);
  EXPECT_THROW(round_robin({"A", "B"}), DataError);
  EXPECT_THROW(round_robin({"A", "B", "C", "D", "E", "E"}), DataError);
}

TEST(Standings, ConservationProperties) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> goals(18, 36);
  const std::vector<std::string> g{"A", "B", "C", "D", "E", "F"};
  for (int trial = 0; trial < 200; ++trial) {
    Standings s = make_standings(g);
    for (const auto& f : round_robin(g)) s = update_standings(s, {f.home, f.away, goals(rng), goals(rng)});
    int points = 0, gd = 0;
    for (const auto& t : s) {
      points += t.points;
      gd += t.goal_difference;
    }
    EXPECT_EQ(points, 2 * 15);
    EXPECT_EQ(gd, 0);
    const auto ranked = rank_group(s);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      const auto& a = ranked[i - 1].standing;
      const auto& b = ranked[i].standing;
      EXPECT_TRUE(std::tie(b.points, b.goal_difference, b.goals_scored) <
                      std::tie(a.points, a.goal_difference, a.goals_scored) ||
                  (std::tie(a.points, a.goal_difference, a.goals_scored) ==
                       std::tie(b.points, b.goal_difference, b.goals_scored) &&
                   a.team < b.team));
    }
    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = rank_group(shuffled);
    for (std::size_t i = 0; i < ranked.size(); ++i) EXPECT_EQ(again[i].standing.team, ranked[i].standing.team);
  }
}

TEST(Standings, PointsScheme) {
  Standings s = make_standings({"A", "B", "C"});
  s = update_standings(s, {"A", "B", 30, 25});
  s = update_standings(s, {"B", "C", 27, 27});
  EXPECT_EQ(s[0].points, 2);
  EXPECT_EQ(s[1].points, 1);
  EXPECT_EQ(s[2].points, 1);
  EXPECT_EQ(s[0].goal_difference, 5);
  EXPECT_THROW(update_standings(s, {"A", "Z", 1, 1}), DataError);
  EXPECT_THROW(update_standings(s, {"A", "A", 1, 1}), DataError);
  EXPECT_THROW(update_standings(s, {"A", "B", -1, 1}), DataError);
  EXPECT_THROW(rank_group(s), DataError);
}

TEST(Standings, TieBreaks) {
  Standings s = make_standings({"Beta", "Alpha"});
  s = update_standings(s, {"Beta", "Alpha", 25, 25});
  const auto r = rank_group(s);
  EXPECT_EQ(r[0].standing.team, "Alpha");  // full tie: name ascending

  Standings t = make_standings({"X", "Y", "Z"});
  t = update_standings(t, {"X", "Y", 30, 20});
  t = update_standings(t, {"Y", "Z", 30, 20});
  t = update_standings(t, {"Z", "X", 30, 20});
  const auto rt = rank_group(t);  // all 2 points, GD 0, 50 scored
  EXPECT_EQ(rt[0].standing.team, "X");
  EXPECT_EQ(rt[2].standing.team, "Z");
}

TEST(Standings, MenGroupStageFromScoreTable) {
  const auto table = TableScorer::load(kData / "scores_men.json");
  const auto def = TournamentDefinition::load(kData / "tournament_men.json");
  const auto state = simulate_tournament(def, [&](const RawMatch& m) { return table(m.home_team, m.away_team); });
  const auto& a = state.standings[0];
  EXPECT_EQ(a[0].standing.team, "Croatia");
  EXPECT_EQ(a[0].standing.points, 9);
  EXPECT_EQ(a[0].standing.goal_difference, 36);
  EXPECT_EQ(a[3].standing.team, "Sweden");
  EXPECT_EQ(a[4].standing.team, "Slovenia");
  EXPECT_EQ(a[3].standing.points, a[4].standing.points);
  const auto& b = state.standings[1];
  EXPECT_EQ(b[0].standing.team, "Denmark");
  EXPECT_EQ(b[3].standing.team, "Hungary");
  EXPECT_EQ(state.bracket.quarterfinals[0], (Pairing{"Croatia", "Hungary"}));
  EXPECT_EQ(state.bracket.quarterfinals[1], (Pairing{"Spain", "Norway"}));
  EXPECT_EQ(state.bracket.quarterfinals[2], (Pairing{"France", "Germany"}));
  EXPECT_EQ(state.bracket.quarterfinals[3], (Pairing{"Denmark", "Sweden"}));
  EXPECT_EQ(state.bracket.medals.gold, "France");
  EXPECT_EQ(state.bracket.medals.silver, "Croatia");
  EXPECT_EQ(state.bracket.medals.bronze, "Denmark");
  EXPECT_EQ(state.bracket.medals.fourth, "Spain");
}

TEST(Knockout, MenBracket) {
  const auto t = men_knockout_scores();
  const auto b = play_knockout(men_bracket(), PairScorer([&](auto& a, auto& c) { return from_table(t, a, c); }));
  EXPECT_EQ(b.semifinals[0], (Pairing{"Croatia", "Spain"}));
  EXPECT_EQ(b.semifinals[1], (Pairing{"France", "Denmark"}));
  EXPECT_EQ(b.final, (Pairing{"Croatia", "France"}));
  EXPECT_EQ(b.bronze_final, (Pairing{"Spain", "Denmark"}));
  EXPECT_EQ(b.medals.gold, "France");
  EXPECT_EQ(b.medals.silver, "Croatia");
  EXPECT_EQ(b.medals.bronze, "Denmark");
  EXPECT_EQ(b.medals.fourth, "Spain");
  ASSERT_EQ(b.results.size(), 8u);
  EXPECT_EQ(b.results[6].stage, Stage::bronze_final);
  EXPECT_EQ(b.results[7].stage, Stage::final);
}

TEST(Knockout, FirstListedSweep) {
  const auto b = play_knockout(men_bracket(), PairScorer([](auto&, auto&) { return MatchScore{1, 0, 1, 0}; }));
  EXPECT_EQ(b.medals.gold, "Croatia");
  EXPECT_EQ(b.medals.silver, "Germany");
  EXPECT_EQ(b.medals.bronze, "Norway");
  EXPECT_EQ(b.medals.fourth, "Denmark");
}

TEST(Knockout, TieBreakRules) {
  EXPECT_TRUE(first_wins({30, 29, 0.0, 100.0}));
  EXPECT_FALSE(first_wins({29, 29, 28.6, 28.9}));
  EXPECT_TRUE(first_wins({29, 29, 29.0, 29.0}));
}

TEST(Knockout, MedalsDistinct) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> goals(20, 30);
  for (int i = 0; i < 100; ++i) {
    const auto b = play_knockout(men_bracket(), PairScorer([&](auto&, auto&) {
                                   const int x = goals(rng), y = goals(rng);
                                   return MatchScore{x, y, double(x), double(y)};
                                 }));
    const std::set<std::string> m{b.medals.gold, b.medals.silver, b.medals.bronze, b.medals.fourth};
    EXPECT_EQ(m.size(), 4u);
  }
}

TEST(Simulate, FixturesUseVenueImportanceAndSchedule) {
  const auto def = TournamentDefinition::load(kData / "tournament_men.json");
  std::vector<RawMatch> seen;
  const auto state = simulate_tournament(def, [&](const RawMatch& m) {
    seen.push_back(m);
    return MatchScore{25, 24, 25.0, 24.0};
  });
  ASSERT_EQ(seen.size(), 38u);
  for (const auto& m : seen) {
    EXPECT_EQ(m.competition, "Olympic Games");
    EXPECT_EQ(importance_value(m.competition, m.category), 10);
    EXPECT_DOUBLE_EQ(m.match_location.lat, kParis.lat);
    EXPECT_EQ(m.category, Category::national);
  }
  EXPECT_EQ(seen.back().date_time, (DateTime{2024, 8, 11, 13, 30}));
  EXPECT_EQ(tournament_to_json(state), tournament_to_json(simulate_tournament(def, [](const RawMatch&) {
              return MatchScore{25, 24, 25.0, 24.0};
            })));
}

TEST(Simulate, OutputsContainTables) {
  const auto table = TableScorer::load(kData / "scores_men.json");
  const auto def = TournamentDefinition::load(kData / "tournament_men.json");
  const auto state = simulate_tournament(def, [&](const RawMatch& m) { return table(m.home_team, m.away_team); });
  const auto j = tournament_to_json(state);
  EXPECT_EQ(j["groups"]["A"]["standings"][0]["points"], 9);
  EXPECT_EQ(j["groups"]["A"]["standings"][0]["goal_difference"], 36);
  EXPECT_EQ(j["medals"]["gold"], "France");
  const auto text = tournament_to_text(state);
  EXPECT_NE(text.find("Points"), std::string::npos);
  EXPECT_NE(text.find("GD"), std::string::npos);
  EXPECT_NE(text.find("Gold: France"), std::string::npos);
}

TEST(Simulate, DefinitionErrors) {
  EXPECT_THROW(TournamentDefinition::load("/nonexistent.json"), DataError);
  EXPECT_THROW(TournamentDefinition::from_json(json::parse(R"({"groups": {}})")), DataError);
  EXPECT_THROW(TableScorer::from_json(json::parse(R"([{"teams": ["a"]}])")), DataError);
  TableScorer t;
  EXPECT_THROW(t("a", "b"), DataError);
}
