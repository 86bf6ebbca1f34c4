#pragma once

// Feature construction: player vocabulary, lineup tokens, the eleven numeric
// covariates and their standardization.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hbo/error.hpp"
#include "hbo/geo.hpp"
#include "hbo/ingest.hpp"

namespace hbo {

using TokenId = std::int32_t;

inline constexpr std::size_t kLineupSlots = 2 * kMaxLineup;  // 32
inline constexpr std::size_t kCovariateCount = 11;

// ---------------------------------------------------------------------------
// Players

struct PlayerMeta {
  std::string name;
  std::string position;
  std::string team;
  friend bool operator==(const PlayerMeta&, const PlayerMeta&) = default;
};

struct RosterEntry {
  std::string position;
  std::string club;
  std::string national_team;
};

/// Player name -> metadata, read from `{"Name": {"position":..,"club":..,"national_team":..}}`.
class Roster {
 public:
  Roster() = default;

  static Roster load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open roster file: " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw DataError("roster file is not valid JSON: " + std::string(e.what()));
    }
    return from_json(j);
  }

  static Roster from_json(const json& j) {
    if (!j.is_object()) throw DataError("roster must be a JSON object keyed by player name");
    Roster r;
    for (const auto& [name, v] : j.items()) {
      if (!v.is_object()) throw DataError("roster entry for '" + name + "' must be an object");
      r.entries_[name] = {v.value("position", ""), v.value("club", ""),
                          v.value("national_team", "")};
    }
    return r;
  }

  void add(std::string name, RosterEntry e) { entries_[std::move(name)] = std::move(e); }

  const RosterEntry* find(const std::string& name) const {
    auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  json to_json() const {
    json j = json::object();
    for (const auto& [name, e] : entries_)
      j[name] = {{"position", e.position}, {"club", e.club}, {"national_team", e.national_team}};
    return j;
  }

 private:
  std::map<std::string, RosterEntry> entries_;
};

/// Bijection between player full names and token ids >= 1. Id 0 is the null token.
class PlayerVocabulary {
 public:
  /// Returns the existing id for `name`, or assigns the next one.
  TokenId add(const std::string& name, PlayerMeta meta = {}) {
    if (auto it = name_to_id_.find(name); it != name_to_id_.end()) return it->second;
    const auto id = static_cast<TokenId>(meta_.size() + 1);
    meta.name = name;
    name_to_id_.emplace(name, id);
    meta_.push_back(std::move(meta));
    return id;
  }

  std::optional<TokenId> find(const std::string& name) const {
    auto it = name_to_id_.find(name);
    if (it == name_to_id_.end()) return std::nullopt;
    return it->second;
  }

  /// Id for `name`, or the null token when unknown.
  TokenId id_or_null(const std::string& name) const { return find(name).value_or(0); }

  bool contains(TokenId id) const { return id >= 1 && static_cast<std::size_t>(id) <= meta_.size(); }

  const PlayerMeta& meta(TokenId id) const {
    if (!contains(id)) throw DataError("token " + std::to_string(id) + " is not in the vocabulary");
    return meta_[static_cast<std::size_t>(id - 1)];
  }

  const std::string& name(TokenId id) const { return meta(id).name; }

  std::size_t size() const { return meta_.size(); }

  friend bool operator==(const PlayerVocabulary& a, const PlayerVocabulary& b) {
    return a.meta_ == b.meta_;
  }

  json to_json() const {
    json arr = json::array();
    for (const auto& m : meta_) arr.push_back({m.name, m.position, m.team});
    return arr;
  }

  static PlayerVocabulary from_json(const json& j) {
    PlayerVocabulary v;
    if (!j.is_array()) throw ModelFormatError("vocabulary must be an array");
    for (const auto& e : j) {
      if (!e.is_array() || e.size() != 3) throw ModelFormatError("malformed vocabulary entry");
      const auto name = e[0].get<std::string>();
      if (v.find(name)) throw ModelFormatError("duplicate vocabulary name '" + name + "'");
      v.add(name, {name, e[1].get<std::string>(), e[2].get<std::string>()});
    }
    return v;
  }

 private:
  std::unordered_map<std::string, TokenId> name_to_id_;
  std::vector<PlayerMeta> meta_;
};

/// Assigns ids in first-appearance order: datasets in order, matches in order,
/// home lineup before away lineup.
inline PlayerVocabulary build_vocabulary(std::span<const Dataset> datasets,
                                         const Roster* roster = nullptr) {
  PlayerVocabulary vocab;
  for (const auto& d : datasets) {
    for (const auto& m : d.matches) {
      auto add_all = [&](const std::vector<std::string>& lineup, const std::string& team) {
        for (const auto& name : lineup) {
          PlayerMeta meta{name, "", team};
          if (roster)
            if (const auto* e = roster->find(name)) meta.position = e->position;
          vocab.add(name, std::move(meta));
        }
      };
      add_all(m.home_lineup, m.home_team);
      add_all(m.away_lineup, m.away_team);
    }
  }
  return vocab;
}

inline PlayerVocabulary build_vocabulary(const Dataset& d, const Roster* roster = nullptr) {
  return build_vocabulary(std::span<const Dataset>(&d, 1), roster);
}

using LineupVector = std::array<TokenId, kLineupSlots>;

/// Home names fill slots 0..15, away names 16..31; padding and unknown names are 0.
inline LineupVector encode_lineup(const PlayerVocabulary& vocab,
                                  const std::vector<std::string>& home,
                                  const std::vector<std::string>& away) {
  if (home.size() > kMaxLineup || away.size() > kMaxLineup)
    throw DataError("lineups are limited to " + std::to_string(kMaxLineup) + " players");
  LineupVector v{};
  for (std::size_t i = 0; i < home.size(); ++i) v[i] = vocab.id_or_null(home[i]);
  for (std::size_t i = 0; i < away.size(); ++i) v[kMaxLineup + i] = vocab.id_or_null(away[i]);
  return v;
}

// ---------------------------------------------------------------------------
// Competition importance

class ImportanceTable {
 public:
  using Map = std::map<std::string, int>;

  ImportanceTable(Map national, Map clubs) : national_(std::move(national)), clubs_(std::move(clubs)) {}

  static const ImportanceTable& defaults() {
    static const ImportanceTable table(
        {{"Olympic Games", 10},
         {"World championships", 9},
         {"European championships", 8},
         {"African cup", 7},
         {"Eurocup", 7},
         {"Asian cup", 6},
         {"Qualifiers", 6},
         {"Tournaments", 5},
         {"Emerging nations", 5},
         {"International Friendly Games", 4}},
        {{"EHF Champions League", 6},
         {"EHF European League", 5},
         {"EHF European Cup", 4},
         {"Regular championships", 3},
         {"National cups", 2},
         {"Friendly games", 1}});
    return table;
  }

  /// `{"national": {name: value}, "clubs": {name: value}}`
  static ImportanceTable from_json(const json& j) {
    try {
      return ImportanceTable(j.at("national").get<Map>(), j.at("clubs").get<Map>());
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed importance table: ") + e.what());
    }
  }

  /// Case-insensitive lookup.
  int value(const std::string& competition, Category category) const {
    const Map& map = category == Category::national ? national_ : clubs_;
    const auto key = lower(competition);
    for (const auto& [name, v] : map)
      if (lower(name) == key) return v;
    std::string known;
    for (const auto& [name, v] : map) known += (known.empty() ? "" : ", ") + name;
    throw DataError("unknown " + to_string(category) + " competition '" + competition +
                    "'; known: " + known);
  }

 private:
  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  }

  Map national_;
  Map clubs_;
};

inline int importance_value(const std::string& competition, Category category) {
  return ImportanceTable::defaults().value(competition, category);
}

// ---------------------------------------------------------------------------
// Team strengths

struct TeamStrength {
  double attack = 0.0;
  double defense = 0.0;
  friend bool operator==(const TeamStrength&, const TeamStrength&) = default;
};

/// Mean goals scored (attack) and conceded (defense) over the team's last
/// `window` scored matches in `history`; global means when the team has none.
inline TeamStrength baseline_strengths(const Dataset& history, const std::string& team,
                                       std::size_t window) {
  if (window < 1) throw ConfigError("strength window must be >= 1");
  std::vector<std::pair<int, int>> games;  // scored, conceded
  double total = 0.0;
  std::size_t sides = 0;
  for (const auto& m : history.matches) {
    if (!m.has_score()) continue;
    total += *m.home_goals + *m.away_goals;
    sides += 2;
    if (m.home_team == team) games.emplace_back(*m.home_goals, *m.away_goals);
    if (m.away_team == team) games.emplace_back(*m.away_goals, *m.home_goals);
  }
  if (games.empty()) {
    const double g = sides ? total / static_cast<double>(sides) : 0.0;
    return {g, g};
  }
  const std::size_t n = std::min(window, games.size());
  double scored = 0.0;
  double conceded = 0.0;
  for (std::size_t i = games.size() - n; i < games.size(); ++i) {
    scored += games[i].first;
    conceded += games[i].second;
  }
  return {scored / static_cast<double>(n), conceded / static_cast<double>(n)};
}

/// Source of attack/defense covariates for a team as known before `before`.
class StrengthProvider {
 public:
  virtual ~StrengthProvider() = default;
  virtual TeamStrength strengths(const std::string& team, const DateTime& before) const = 0;
};

/// Rolling-window history estimator that only looks at matches strictly
/// before the requested time.
class HistoryStrengths final : public StrengthProvider {
 public:
  HistoryStrengths(const Dataset& history, std::size_t window) : window_(window) {
    if (window < 1) throw ConfigError("strength window must be >= 1");
    for (const auto& m : history.matches) {
      if (!m.has_score()) continue;
      games_[m.home_team].push_back({m.date_time, *m.home_goals, *m.away_goals});
      games_[m.away_team].push_back({m.date_time, *m.away_goals, *m.home_goals});
      const double prev = cumulative_.empty() ? 0.0 : cumulative_.back().second;
      cumulative_.emplace_back(m.date_time, prev + *m.home_goals + *m.away_goals);
    }
  }

  TeamStrength strengths(const std::string& team, const DateTime& before) const override {
    if (auto it = games_.find(team); it != games_.end()) {
      const auto& g = it->second;
      const auto end = std::lower_bound(g.begin(), g.end(), before,
                                        [](const Game& x, const DateTime& t) { return x.when < t; });
      const auto count = static_cast<std::size_t>(end - g.begin());
      if (count > 0) {
        const std::size_t n = std::min(window_, count);
        double s = 0.0;
        double c = 0.0;
        for (auto p = end - static_cast<std::ptrdiff_t>(n); p != end; ++p) {
          s += p->scored;
          c += p->conceded;
        }
        return {s / static_cast<double>(n), c / static_cast<double>(n)};
      }
    }
    return global_before(before);
  }

  /// Latest estimate for every team seen in history, plus the global fallback.
  std::map<std::string, TeamStrength> snapshot() const {
    std::map<std::string, TeamStrength> out;
    const DateTime end{9999, 12, 31, 23, 59};
    for (const auto& [team, g] : games_) out[team] = strengths(team, end);
    return out;
  }

  TeamStrength global() const { return global_before(DateTime{9999, 12, 31, 23, 59}); }

 private:
  struct Game {
    DateTime when;
    int scored;
    int conceded;
  };

  TeamStrength global_before(const DateTime& before) const {
    const auto end = std::lower_bound(
        cumulative_.begin(), cumulative_.end(), before,
        [](const std::pair<DateTime, double>& x, const DateTime& t) { return x.first < t; });
    const auto matches = static_cast<std::size_t>(end - cumulative_.begin());
    if (matches == 0) return {};
    const double g = (end - 1)->second / (2.0 * static_cast<double>(matches));
    return {g, g};
  }

  std::size_t window_;
  std::map<std::string, std::vector<Game>> games_;
  std::vector<std::pair<DateTime, double>> cumulative_;
};

/// Fixed per-team strengths, e.g. the snapshot persisted with a trained model.
class TableStrengths final : public StrengthProvider {
 public:
  TableStrengths() = default;
  TableStrengths(std::map<std::string, TeamStrength> table, TeamStrength fallback)
      : table_(std::move(table)), fallback_(fallback) {}

  TeamStrength strengths(const std::string& team, const DateTime&) const override {
    auto it = table_.find(team);
    return it == table_.end() ? fallback_ : it->second;
  }

  void set(const std::string& team, TeamStrength s) { table_[team] = s; }
  const std::map<std::string, TeamStrength>& table() const { return table_; }
  const TeamStrength& fallback() const { return fallback_; }

 private:
  std::map<std::string, TeamStrength> table_;
  TeamStrength fallback_;
};

// ---------------------------------------------------------------------------
// Covariates and normalization

inline constexpr std::array<const char*, kCovariateCount> kCovariateNames = {
    "day_of_week",     "hour",          "importance",   "travel_distance_home",
    "travel_distance_away", "n_clubs_home", "n_clubs_away", "attack_home",
    "attack_away",     "defense_home",  "defense_away"};

struct Covariates {
  double day_of_week = 0;
  double hour = 0;
  double importance = 1;
  double travel_distance_home = 0;
  double travel_distance_away = 0;
  double n_clubs_home = 1;
  double n_clubs_away = 1;
  double attack_home = 0;
  double attack_away = 0;
  double defense_home = 0;
  double defense_away = 0;

  std::vector<double> values() const {
    return {day_of_week,   hour,          importance,  travel_distance_home, travel_distance_away,
            n_clubs_home,  n_clubs_away,  attack_home, attack_away,          defense_home,
            defense_away};
  }
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  double target_scale = 50.0;

  std::size_t dims() const { return mean.size(); }

  std::vector<double> standardize(std::span<const double> raw) const {
    check(raw.size());
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean[i]) / stddev[i];
    return out;
  }

  std::vector<double> destandardize(std::span<const double> z) const {
    check(z.size());
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * stddev[i] + mean[i];
    return out;
  }

  /// Identity transform for `dims` covariates.
  static NormalizationStats identity(std::size_t dims, double target_scale = 50.0) {
    return {std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0), target_scale};
  }

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;

 private:
  void check(std::size_t n) const {
    if (n != mean.size())
      throw DataError("expected " + std::to_string(mean.size()) + " covariates, got " +
                      std::to_string(n));
  }
};

/// Per-dimension mean and population standard deviation. Dimensions whose
/// spread is zero (up to rounding, 1e-12 relative) get sigma = 1.
inline NormalizationStats fit_normalization(const std::vector<std::vector<double>>& rows,
                                            double target_scale = 50.0) {
  if (rows.empty()) throw DataError("cannot fit normalization on an empty training set");
  if (!(target_scale > 0.0)) throw ConfigError("target scale must be positive");
  const std::size_t d = rows.front().size();
  NormalizationStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0), target_scale};
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    if (r.size() != d) throw DataError("ragged covariate rows");
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += r[i];
  }
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i) var[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
  for (std::size_t i = 0; i < d; ++i) {
    const double sd = std::sqrt(var[i] / n);
    s.stddev[i] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[i])) ? sd : 1.0;
  }
  return s;
}

/// Model input: standardized covariates plus lineup tokens.
struct FeatureVector {
  std::vector<double> covariates;
  std::vector<TokenId> tokens;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Counts distinct clubs among lineup players known to the roster; 1 when none are known.
inline int count_clubs(const std::vector<std::string>& lineup, const Roster* roster) {
  if (!roster) return 1;
  std::set<std::string> clubs;
  for (const auto& name : lineup)
    if (const auto* e = roster->find(name); e && !e->club.empty()) clubs.insert(e->club);
  return clubs.empty() ? 1 : static_cast<int>(clubs.size());
}

/// Turns match records into model inputs.
class FeatureAssembler {
 public:
  FeatureAssembler(const PlayerVocabulary& vocab, const StrengthProvider& strengths,
                   const Roster* roster = nullptr,
                   const ImportanceTable& importance = ImportanceTable::defaults())
      : vocab_(vocab), strengths_(strengths), roster_(roster), importance_(importance) {}

  Covariates covariates(const RawMatch& m) const {
    Covariates c;
    c.day_of_week = m.date_time.day_of_week();
    c.hour = m.date_time.hour;
    c.importance = importance_.value(m.competition, m.category);
    c.travel_distance_home = travel_distance(m.home_location, m.match_location);
    c.travel_distance_away = travel_distance(m.away_location, m.match_location);
    if (m.category == Category::national) {
      c.n_clubs_home = count_clubs(m.home_lineup, roster_);
      c.n_clubs_away = count_clubs(m.away_lineup, roster_);
    }
    const bool need_home = !m.attack_home || !m.defense_home;
    const bool need_away = !m.attack_away || !m.defense_away;
    const TeamStrength home = need_home ? strengths_.strengths(m.home_team, m.date_time) : TeamStrength{};
    const TeamStrength away = need_away ? strengths_.strengths(m.away_team, m.date_time) : TeamStrength{};
    c.attack_home = m.attack_home.value_or(home.attack);
    c.defense_home = m.defense_home.value_or(home.defense);
    c.attack_away = m.attack_away.value_or(away.attack);
    c.defense_away = m.defense_away.value_or(away.defense);
    return c;
  }

  LineupVector lineup(const RawMatch& m) const {
    return encode_lineup(vocab_, m.home_lineup, m.away_lineup);
  }

  /// Standardizes covariates when `stats` is given.
  FeatureVector assemble(const RawMatch& m, const NormalizationStats* stats = nullptr) const {
    FeatureVector f;
    const auto raw = covariates(m).values();
    f.covariates = stats ? stats->standardize(raw) : raw;
    const auto tokens = lineup(m);
    f.tokens.assign(tokens.begin(), tokens.end());
    return f;
  }

 private:
  const PlayerVocabulary& vocab_;
  const StrengthProvider& strengths_;
  const Roster* roster_;
  const ImportanceTable& importance_;
};

}  // namespace hbo
