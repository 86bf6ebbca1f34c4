#pragma once

// Olympic-format tournament: two round-robin groups of six, top four of each
// group cross over into quarterfinals, then single elimination with a bronze
// final between the semifinal losers.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hbo/error.hpp"
#include "hbo/ingest.hpp"

namespace hbo {

inline constexpr std::size_t kGroupSize = 6;
inline constexpr std::size_t kQualifiers = 4;
inline constexpr GeoPoint kParis{48.8566, 2.3522};

struct Fixture {
  std::string home;
  std::string away;
  friend bool operator==(const Fixture&, const Fixture&) = default;
};

/// Circle method: team 0 stays fixed while the others rotate. Five rounds of
/// three fixtures; home side alternates between rounds for the fixed team.
inline std::vector<Fixture> round_robin(const std::vector<std::string>& group) {
  if (group.size() != kGroupSize)
    throw DataError("a group needs exactly " + std::to_string(kGroupSize) + " teams, got " +
                    std::to_string(group.size()));
  if (std::set<std::string>(group.begin(), group.end()).size() != group.size())
    throw DataError("duplicate team in group");
  std::vector<std::string> ring(group.begin() + 1, group.end());
  const std::size_t n = group.size();
  std::vector<Fixture> out;
  for (std::size_t round = 0; round + 1 < n; ++round) {
    std::vector<std::string> slots{group[0]};
    slots.insert(slots.end(), ring.begin(), ring.end());
    for (std::size_t i = 0; i < n / 2; ++i) {
      Fixture f{slots[i], slots[n - 1 - i]};
      if (i == 0 && round % 2 == 1) std::swap(f.home, f.away);
      out.push_back(std::move(f));
    }
    std::rotate(ring.rbegin(), ring.rbegin() + 1, ring.rend());
  }
  return out;
}

struct GroupStanding {
  std::string team;
  int points = 0;
  int goal_difference = 0;
  int goals_scored = 0;
  int played = 0;
  friend bool operator==(const GroupStanding&, const GroupStanding&) = default;
};

using Standings = std::vector<GroupStanding>;

inline Standings make_standings(const std::vector<std::string>& teams) {
  Standings s;
  for (const auto& t : teams) s.push_back({t});
  return s;
}

struct FixtureResult {
  std::string home;
  std::string away;
  int home_goals = 0;
  int away_goals = 0;
  double raw_home = 0.0;
  double raw_away = 0.0;
};

/// 2 points for a win, 1 each for a draw.
inline Standings update_standings(Standings standings, const FixtureResult& r) {
  auto find = [&](const std::string& team) -> GroupStanding& {
    for (auto& s : standings)
      if (s.team == team) return s;
    throw DataError("team '" + team + "' is not in these standings");
  };
  if (r.home == r.away) throw DataError("a team cannot play itself");
  if (r.home_goals < 0 || r.away_goals < 0) throw DataError("goals must be nonnegative");
  GroupStanding& h = find(r.home);
  GroupStanding& a = find(r.away);
  const int max_played = static_cast<int>(standings.size()) - 1;
  if (h.played >= max_played || a.played >= max_played)
    throw DataError("team has already played every group fixture");
  h.played += 1;
  a.played += 1;
  h.goals_scored += r.home_goals;
  a.goals_scored += r.away_goals;
  h.goal_difference += r.home_goals - r.away_goals;
  a.goal_difference += r.away_goals - r.home_goals;
  if (r.home_goals > r.away_goals) h.points += 2;
  else if (r.home_goals < r.away_goals) a.points += 2;
  else {
    h.points += 1;
    a.points += 1;
  }
  return standings;
}

struct RankedStanding {
  GroupStanding standing;
  int rank = 0;
  bool qualified = false;
};

/// Points, then goal difference, then goals scored (all descending), then
/// team name ascending. The top four qualify.
inline std::vector<RankedStanding> rank_group(const Standings& standings) {
  const int expected = static_cast<int>(standings.size()) - 1;
  for (const auto& s : standings)
    if (s.played != expected)
      throw DataError("group incomplete: '" + s.team + "' played " + std::to_string(s.played) +
                      " of " + std::to_string(expected));
  Standings sorted = standings;
  std::sort(sorted.begin(), sorted.end(), [](const GroupStanding& a, const GroupStanding& b) {
    if (a.points != b.points) return a.points > b.points;
    if (a.goal_difference != b.goal_difference) return a.goal_difference > b.goal_difference;
    if (a.goals_scored != b.goals_scored) return a.goals_scored > b.goals_scored;
    return a.team < b.team;
  });
  std::vector<RankedStanding> out;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    out.push_back({sorted[i], static_cast<int>(i + 1), i < kQualifiers});
  return out;
}

struct Pairing {
  std::string first;
  std::string second;
  friend bool operator==(const Pairing&, const Pairing&) = default;
};

/// Bracket order: A1-B4 and A2-B3 feed semifinal 1, B2-A3 and B1-A4 feed semifinal 2.
inline std::array<Pairing, 4> seed_quarterfinals(const std::vector<RankedStanding>& group_a,
                                                 const std::vector<RankedStanding>& group_b) {
  auto qualifiers = [](const std::vector<RankedStanding>& g, const char* label) {
    std::vector<std::string> q;
    for (const auto& r : g)
      if (r.qualified) q.push_back(r.standing.team);
    if (q.size() < kQualifiers)
      throw DataError(std::string("group ") + label + " has only " + std::to_string(q.size()) +
                      " qualifiers");
    return q;
  };
  const auto a = qualifiers(group_a, "A");
  const auto b = qualifiers(group_b, "B");
  return {Pairing{a[0], b[3]}, Pairing{a[1], b[2]}, Pairing{b[1], a[2]}, Pairing{b[0], a[3]}};
}

struct MatchScore {
  int first = 0;
  int second = 0;
  double raw_first = 0.0;
  double raw_second = 0.0;
};

enum class Stage { group, quarterfinal, semifinal, bronze_final, final };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::group: return "group";
    case Stage::quarterfinal: return "quarterfinal";
    case Stage::semifinal: return "semifinal";
    case Stage::bronze_final: return "bronze_final";
    case Stage::final: return "final";
  }
  return "?";
}

struct KnockoutResult {
  Stage stage = Stage::quarterfinal;
  Pairing pairing;
  MatchScore score;
  std::string winner;
  std::string loser;
};

struct Medals {
  std::string gold;
  std::string silver;
  std::string bronze;
  std::string fourth;
};

struct Bracket {
  std::array<Pairing, 4> quarterfinals;
  std::array<Pairing, 2> semifinals;
  Pairing final;
  Pairing bronze_final;
  std::vector<KnockoutResult> results;  // in playing order: QF1..4, SF1..2, bronze, final
  Medals medals;
};

using StageScorer = std::function<MatchScore(const std::string& first, const std::string& second, Stage)>;
using PairScorer = std::function<MatchScore(const std::string& first, const std::string& second)>;

/// Winner by integer score, then by raw score, then the first-listed team.
inline bool first_wins(const MatchScore& s) {
  if (s.first != s.second) return s.first > s.second;
  if (s.raw_first != s.raw_second) return s.raw_first > s.raw_second;
  return true;
}

inline Bracket play_knockout(Bracket bracket, const StageScorer& score) {
  bracket.results.clear();
  auto play = [&](const Pairing& p, Stage stage) -> const KnockoutResult& {
    KnockoutResult r{stage, p, score(p.first, p.second, stage), {}, {}};
    const bool fw = first_wins(r.score);
    r.winner = fw ? p.first : p.second;
    r.loser = fw ? p.second : p.first;
    bracket.results.push_back(std::move(r));
    return bracket.results.back();
  };
  std::array<std::string, 4> qf_winners;
  for (std::size_t i = 0; i < 4; ++i)
    qf_winners[i] = play(bracket.quarterfinals[i], Stage::quarterfinal).winner;
  bracket.semifinals = {Pairing{qf_winners[0], qf_winners[1]}, Pairing{qf_winners[2], qf_winners[3]}};
  std::array<std::string, 2> sf_winners;
  std::array<std::string, 2> sf_losers;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& r = play(bracket.semifinals[i], Stage::semifinal);
    sf_winners[i] = r.winner;
    sf_losers[i] = r.loser;
  }
  bracket.bronze_final = {sf_losers[0], sf_losers[1]};
  bracket.final = {sf_winners[0], sf_winners[1]};
  const auto bronze = play(bracket.bronze_final, Stage::bronze_final);
  const auto fin = play(bracket.final, Stage::final);
  bracket.medals = {fin.winner, fin.loser, bronze.winner, bronze.loser};
  return bracket;
}

inline Bracket play_knockout(Bracket bracket, const PairScorer& score) {
  return play_knockout(std::move(bracket), StageScorer([&](const std::string& a, const std::string& b,
                                                           Stage) { return score(a, b); }));
}

// ---------------------------------------------------------------------------
// Tournament definition and simulation

struct TournamentTeam {
  GeoPoint location;
  std::vector<std::string> lineup;
  std::optional<double> attack;
  std::optional<double> defense;
};

struct ScheduledFixture {
  Fixture fixture;
  DateTime date_time;
};

struct TournamentDefinition {
  std::string competition = "Olympic Games";
  Gender gender = Gender::men;
  std::string season = "2024";
  GeoPoint venue = kParis;
  std::array<std::vector<std::string>, 2> groups;
  std::map<std::string, TournamentTeam> teams;
  std::vector<ScheduledFixture> schedule;
  std::map<Stage, DateTime> knockout_dates;

  static TournamentDefinition from_json(const json& j) {
    TournamentDefinition d;
    try {
      d.competition = j.value("competition", d.competition);
      d.season = j.value("season", d.season);
      const auto g = parse_gender(j.value("gender", std::string("men")));
      if (!g) throw DataError("tournament gender must be 'men' or 'women'");
      d.gender = *g;
      if (j.contains("venue")) d.venue = detail::parse_location(j["venue"], 0, "venue");
      const auto& groups = j.at("groups");
      d.groups[0] = groups.at("A").get<std::vector<std::string>>();
      d.groups[1] = groups.at("B").get<std::vector<std::string>>();
      for (const auto& [name, t] : j.at("teams").items()) {
        TournamentTeam team;
        team.location = detail::parse_location(t.at("location"), 0, "teams." + name + ".location");
        team.lineup = detail::parse_lineup(t.value("lineup", json::array()), 0, "teams." + name + ".lineup");
        if (t.contains("attack")) team.attack = t["attack"].get<double>();
        if (t.contains("defense")) team.defense = t["defense"].get<double>();
        d.teams[name] = std::move(team);
      }
      for (const auto& s : j.at("schedule")) {
        const auto dt = DateTime::parse(s.at("date_time").get<std::string>());
        if (!dt) throw DataError("bad schedule date_time");
        d.schedule.push_back({{s.at("home").get<std::string>(), s.at("away").get<std::string>()}, *dt});
      }
      const auto& ko = j.at("knockout_dates");
      for (auto [key, stage] : {std::pair{"quarterfinals", Stage::quarterfinal},
                                std::pair{"semifinals", Stage::semifinal},
                                std::pair{"bronze_final", Stage::bronze_final},
                                std::pair{"final", Stage::final}}) {
        const auto dt = DateTime::parse(ko.at(key).get<std::string>());
        if (!dt) throw DataError(std::string("bad knockout date for ") + key);
        d.knockout_dates[stage] = *dt;
      }
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed tournament file: ") + e.what());
    }
    for (const auto& g : d.groups)
      for (const auto& t : g)
        if (!d.teams.contains(t)) throw DataError("team '" + t + "' has no entry in 'teams'");
    return d;
  }

  static TournamentDefinition load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open tournament file: " + path.string());
    try {
      return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw DataError(std::string("tournament file is not valid JSON: ") + e.what());
    }
  }

  /// Scheduled orientation and kick-off of a group fixture, in either order.
  const ScheduledFixture& scheduled(const Fixture& f) const {
    for (const auto& s : schedule)
      if ((s.fixture.home == f.home && s.fixture.away == f.away) ||
          (s.fixture.home == f.away && s.fixture.away == f.home))
        return s;
    throw DataError("no schedule entry for " + f.home + " vs " + f.away);
  }

  /// Match record for a fixture between two tournament teams at the venue.
  RawMatch make_match(const std::string& home, const std::string& away, const DateTime& when,
                      const std::string& id) const {
    const auto& h = teams.at(home);
    const auto& a = teams.at(away);
    RawMatch m;
    m.match_id = id;
    m.date_time = when;
    m.competition = competition;
    m.home_team = home;
    m.away_team = away;
    m.home_location = h.location;
    m.away_location = a.location;
    m.match_location = venue;
    m.home_lineup = h.lineup;
    m.away_lineup = a.lineup;
    m.category = Category::national;
    m.gender = gender;
    m.season = season;
    m.attack_home = h.attack;
    m.defense_home = h.defense;
    m.attack_away = a.attack;
    m.defense_away = a.defense;
    return m;
  }
};

struct TournamentState {
  std::array<std::vector<FixtureResult>, 2> group_results;
  std::array<std::vector<RankedStanding>, 2> standings;
  Bracket bracket;
};

using MatchScorer = std::function<MatchScore(const RawMatch&)>;

/// Plays all group fixtures and the knockout phase. Group fixtures follow the
/// round-robin order with the schedule's home/away orientation.
inline TournamentState simulate_tournament(const TournamentDefinition& def, const MatchScorer& scorer) {
  TournamentState state;
  static constexpr const char* kLabels[2] = {"A", "B"};
  for (std::size_t g = 0; g < 2; ++g) {
    Standings table = make_standings(def.groups[g]);
    int n = 0;
    for (const auto& f : round_robin(def.groups[g])) {
      const auto& sched = def.scheduled(f);
      const auto m = def.make_match(sched.fixture.home, sched.fixture.away, sched.date_time,
                                    std::string("group-") + kLabels[g] + "-" + std::to_string(++n));
      const MatchScore s = scorer(m);
      FixtureResult r{m.home_team, m.away_team, s.first, s.second, s.raw_first, s.raw_second};
      table = update_standings(std::move(table), r);
      state.group_results[g].push_back(std::move(r));
    }
    state.standings[g] = rank_group(table);
  }
  Bracket bracket;
  bracket.quarterfinals = seed_quarterfinals(state.standings[0], state.standings[1]);
  int ko = 0;
  state.bracket = play_knockout(std::move(bracket), StageScorer([&](const std::string& a,
                                                                    const std::string& b, Stage st) {
    const auto when = def.knockout_dates.at(st);
    return scorer(def.make_match(a, b, when, to_string(st) + "-" + std::to_string(++ko)));
  }));
  return state;
}

/// Scores looked up from a fixed table, e.g. published predictions. Each entry
/// is `{"teams": [a, b], "score": [ga, gb]}` and matches either orientation.
class TableScorer {
 public:
  static TableScorer from_json(const json& j) {
    TableScorer t;
    try {
      for (const auto& e : j) {
        const auto teams = e.at("teams").get<std::array<std::string, 2>>();
        const auto score = e.at("score").get<std::array<int, 2>>();
        t.add(teams[0], teams[1], score[0], score[1]);
      }
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed score table: ") + e.what());
    }
    return t;
  }

  static TableScorer load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open score table: " + path.string());
    try {
      return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw DataError(std::string("score table is not valid JSON: ") + e.what());
    }
  }

  // A pairing listed more than once (group game and later knockout) is replayed in listed order.
  void add(const std::string& a, const std::string& b, int ga, int gb) {
    auto& slot = scores_[std::minmax(a, b)];
    slot.entries.push_back(a <= b ? std::pair{ga, gb} : std::pair{gb, ga});
  }

  std::optional<MatchScore> find(const std::string& a, const std::string& b) const {
    const auto it = scores_.find(std::minmax(a, b));
    if (it == scores_.end()) return std::nullopt;
    auto& slot = it->second;
    const auto [x, y] = slot.entries[std::min(slot.used, slot.entries.size() - 1)];
    ++slot.used;
    const int ga = a <= b ? x : y, gb = a <= b ? y : x;
    return MatchScore{ga, gb, double(ga), double(gb)};
  }

  MatchScore operator()(const std::string& a, const std::string& b) const {
    if (auto s = find(a, b)) return *s;
    throw DataError("no score for " + a + " vs " + b);
  }

 private:
  struct Slot {
    std::vector<std::pair<int, int>> entries;  // goals of the alphabetically first team first
    mutable std::size_t used = 0;
  };
  std::map<std::pair<std::string, std::string>, Slot> scores_;
};

// ---------------------------------------------------------------------------
// Output

inline json tournament_to_json(const TournamentState& s) {
  json out;
  static constexpr const char* kLabels[2] = {"A", "B"};
  for (std::size_t g = 0; g < 2; ++g) {
    json table = json::array();
    for (const auto& r : s.standings[g])
      table.push_back({{"rank", r.rank},
                       {"team", r.standing.team},
                       {"points", r.standing.points},
                       {"goal_difference", r.standing.goal_difference},
                       {"goals_scored", r.standing.goals_scored},
                       {"played", r.standing.played},
                       {"qualified", r.qualified}});
    json results = json::array();
    for (const auto& r : s.group_results[g])
      results.push_back({{"home", r.home}, {"away", r.away}, {"score", {r.home_goals, r.away_goals}},
                         {"raw", {r.raw_home, r.raw_away}}});
    out["groups"][kLabels[g]] = {{"standings", table}, {"results", results}};
  }
  json ko = json::array();
  for (const auto& r : s.bracket.results)
    ko.push_back({{"stage", to_string(r.stage)},
                  {"teams", {r.pairing.first, r.pairing.second}},
                  {"score", {r.score.first, r.score.second}},
                  {"raw", {r.score.raw_first, r.score.raw_second}},
                  {"winner", r.winner}});
  out["knockout"] = ko;
  const auto& m = s.bracket.medals;
  out["medals"] = {{"gold", m.gold}, {"silver", m.silver}, {"bronze", m.bronze}, {"fourth", m.fourth}};
  return out;
}

inline std::string tournament_to_text(const TournamentState& s) {
  std::ostringstream out;
  static constexpr const char* kLabels[2] = {"A", "B"};
  char line[160];
  for (std::size_t g = 0; g < 2; ++g) {
    out << "Group " << kLabels[g] << "\n";
    std::snprintf(line, sizeof line, "%-4s %-20s %6s %6s %6s\n", "Rank", "Team", "Points", "GD", "GF");
    out << line;
    for (const auto& r : s.standings[g]) {
      std::snprintf(line, sizeof line, "%-4d %-20s %6d %6d %6d%s\n", r.rank, r.standing.team.c_str(),
                    r.standing.points, r.standing.goal_difference, r.standing.goals_scored,
                    r.qualified ? "  Q" : "");
      out << line;
    }
    out << "\n";
  }
  Stage current = Stage::group;
  for (const auto& r : s.bracket.results) {
    if (r.stage != current) {
      current = r.stage;
      out << to_string(current) << "\n";
    }
    out << "  " << r.pairing.first << " " << r.score.first << " - " << r.score.second << " "
        << r.pairing.second << "  (winner: " << r.winner << ")\n";
  }
  const auto& m = s.bracket.medals;
  out << "\nGold: " << m.gold << "\nSilver: " << m.silver << "\nBronze: " << m.bronze
      << "\nFourth: " << m.fourth << "\n";
  return out.str();
}

}  // namespace hbo
