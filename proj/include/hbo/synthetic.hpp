#pragma once

// Synthetic handball universe for demos and tests. Every player carries a
// latent attacking and defensive effect; club and national matches are scored
// from the effects of the players in each lineup plus noise. National players
// are a subset of club players, so club data carries information about them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hbo/features.hpp"
#include "hbo/ingest.hpp"

namespace hbo {

struct SyntheticOptions {
  std::uint64_t seed = 1;
  Gender gender = Gender::men;
  std::size_t clubs = 24;
  std::size_t club_roster = 16;
  std::size_t nations = 12;
  std::size_t national_pool = 16;  // eligible players per nation
  std::size_t national_matches = 2000;
  std::size_t clubs_ratio = 8;  // club matches per national match
  double player_effect_sd = 0.6;
  double noise_sd = 1.5;
  double base_goals = 26.0;
  double home_advantage = 1.0;
  double missing_lineup_fraction = 0.0;  // share of lineups blanked out
  bool shuffle_lineups = false;  // true: match-sheet order unrelated to the roster
  int first_year = 2019;
  int years = 5;
};

struct SyntheticUniverse {
  Dataset clubs;
  Dataset national;
  Roster roster;
  std::vector<std::string> players;
  std::vector<double> attack_effect;
  std::vector<double> defense_effect;
  std::vector<std::string> club_names;
  std::vector<std::string> nation_names;
  std::vector<std::vector<std::size_t>> club_players;
  std::vector<std::vector<std::size_t>> nation_players;
  std::vector<GeoPoint> club_locations;
  std::vector<GeoPoint> nation_locations;
};

namespace detail {

inline std::string synthetic_player_name(std::size_t i) {
  static const char* first[] = {"Adam", "Bruno", "Carl", "Dario", "Emil", "Felix", "Goran", "Hugo",
                                "Igor", "Jonas", "Karl", "Luka", "Mads", "Nils", "Oskar", "Pavel"};
  static const char* last[] = {"Berg", "Costa", "Dahl", "Eriksen", "Fischer", "Gomez", "Horvat",
                               "Ivanov", "Jensen", "Kovac", "Lund", "Moreau", "Novak", "Olsen",
                               "Petit", "Quist", "Richter", "Santos", "Toth", "Varga"};
  constexpr std::size_t nf = std::size(first);
  constexpr std::size_t nl = std::size(last);
  std::string name = std::string(first[i % nf]) + " " + last[(i / nf) % nl];
  if (const std::size_t gen = i / (nf * nl); gen > 0) name += " " + std::to_string(gen + 1);
  return name;
}

}  // namespace detail

inline SyntheticUniverse make_synthetic_universe(const SyntheticOptions& o) {
  SyntheticUniverse u;
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> effect(0.0, o.player_effect_sd);
  std::normal_distribution<double> noise(0.0, o.noise_sd);
  std::uniform_real_distribution<double> lat(36.0, 62.0);
  std::uniform_real_distribution<double> lon(-9.0, 30.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  static const char* positions[] = {"goalkeeper", "left wing", "left back", "center back",
                                    "right back", "right wing", "line player"};
  const std::size_t n_players = o.clubs * o.club_roster;
  for (std::size_t p = 0; p < n_players; ++p) {
    u.players.push_back(detail::synthetic_player_name(p));
    u.attack_effect.push_back(effect(rng));
    u.defense_effect.push_back(effect(rng));
  }
  u.club_players.resize(o.clubs);
  for (std::size_t c = 0; c < o.clubs; ++c) {
    u.club_names.push_back("Club " + std::to_string(c + 1));
    u.club_locations.push_back({lat(rng), lon(rng)});
  }
  for (std::size_t p = 0; p < n_players; ++p) u.club_players[p % o.clubs].push_back(p);

  std::vector<std::size_t> shuffled(n_players);
  for (std::size_t i = 0; i < n_players; ++i) shuffled[i] = i;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  u.nation_players.resize(o.nations);
  std::vector<int> nation_of(n_players, -1);
  for (std::size_t n = 0; n < o.nations; ++n) {
    u.nation_names.push_back("Nation " + std::string(1, static_cast<char>('A' + n % 26)) +
                             (n >= 26 ? std::to_string(n / 26) : ""));
    u.nation_locations.push_back({lat(rng), lon(rng)});
    for (std::size_t k = 0; k < o.national_pool && n * o.national_pool + k < n_players; ++k) {
      const std::size_t p = shuffled[n * o.national_pool + k];
      u.nation_players[n].push_back(p);
      nation_of[p] = static_cast<int>(n);
    }
    std::sort(u.nation_players[n].begin(), u.nation_players[n].end());
  }
  for (std::size_t p = 0; p < n_players; ++p)
    u.roster.add(u.players[p], {positions[p % std::size(positions)], u.club_names[p % o.clubs],
                                nation_of[p] >= 0 ? u.nation_names[nation_of[p]] : ""});

  auto pick_lineup = [&](const std::vector<std::size_t>& pool) {
    std::uniform_int_distribution<std::size_t> size(14, std::min<std::size_t>(16, pool.size()));
    std::vector<std::size_t> idx = pool;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(size(rng), idx.size()));
    if (!o.shuffle_lineups) std::sort(idx.begin(), idx.end());
    return idx;
  };
  auto goals = [&](const std::vector<std::size_t>& att, const std::vector<std::size_t>& def, bool home) {
    double g = o.base_goals + (home ? o.home_advantage : 0.0) + noise(rng);
    for (auto p : att) g += u.attack_effect[p];
    for (auto p : def) g -= u.defense_effect[p];
    return std::max(0, static_cast<int>(std::lround(g)));
  };
  auto names = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (auto p : idx) out.push_back(u.players[p]);
    return out;
  };
  auto when = [&](std::size_t i, std::size_t total) {
    // Spread matches evenly over the seasons, ordered by index.
    const double frac = (static_cast<double>(i) + 0.5) / static_cast<double>(total);
    const int day_index = static_cast<int>(frac * 365.0 * o.years);
    const std::chrono::sys_days start{std::chrono::year{o.first_year} / 1 / 1};
    const std::chrono::year_month_day ymd{start + std::chrono::days{day_index}};
    std::uniform_int_distribution<int> hour(12, 20);
    return DateTime{int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day())), hour(rng), 0};
  };

  static const char* club_comps[] = {"Regular championships", "Regular championships",
                                     "Regular championships", "National cups",
                                     "EHF Champions League",  "EHF European League"};
  static const char* national_comps[] = {"International Friendly Games", "Qualifiers",
                                         "European championships", "World championships"};

  auto generate = [&](Dataset& d, Category cat, std::size_t count,
                      const std::vector<std::vector<std::size_t>>& teams,
                      const std::vector<std::string>& team_names,
                      const std::vector<GeoPoint>& locations, std::span<const char* const> comps) {
    d.category = cat;
    d.gender = o.gender;
    std::uniform_int_distribution<std::size_t> team(0, teams.size() - 1);
    std::uniform_int_distribution<std::size_t> comp(0, comps.size() - 1);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t h = team(rng);
      std::size_t a = team(rng);
      while (a == h) a = team(rng);
      const auto hl = pick_lineup(teams[h]);
      const auto al = pick_lineup(teams[a]);
      RawMatch m;
      m.match_id = (cat == Category::clubs ? "c" : "n") + std::to_string(i + 1);
      m.date_time = when(i, count);
      m.competition = comps[comp(rng)];
      m.home_team = team_names[h];
      m.away_team = team_names[a];
      m.home_location = locations[h];
      m.away_location = locations[a];
      m.match_location = locations[h];
      m.home_lineup = names(hl);
      m.away_lineup = names(al);
      m.home_goals = goals(hl, al, true);
      m.away_goals = goals(al, hl, false);
      m.category = cat;
      m.gender = o.gender;
      m.season = std::to_string(m.date_time.year);
      if (unit(rng) < o.missing_lineup_fraction) m.home_lineup.clear();
      if (unit(rng) < o.missing_lineup_fraction) m.away_lineup.clear();
      d.matches.push_back(std::move(m));
    }
  };
  generate(u.clubs, Category::clubs, o.national_matches * o.clubs_ratio, u.club_players,
           u.club_names, u.club_locations, club_comps);
  generate(u.national, Category::national, o.national_matches, u.nation_players, u.nation_names,
           u.nation_locations, national_comps);
  return u;
}

}  // namespace hbo
