#pragma once

// Match records, file loaders, lineup imputation and dataset splitting.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hbo/error.hpp"

namespace hbo {

using json = nlohmann::json;

inline constexpr std::size_t kMaxLineup = 16;

enum class Category { clubs, national };
enum class Gender { men, women };

inline std::string to_string(Category c) { return c == Category::clubs ? "clubs" : "national"; }
inline std::string to_string(Gender g) { return g == Gender::men ? "men" : "women"; }

inline std::optional<Category> parse_category(std::string_view s) {
  if (s == "clubs") return Category::clubs;
  if (s == "national") return Category::national;
  return std::nullopt;
}

inline std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "men") return Gender::men;
  if (s == "women") return Gender::women;
  return std::nullopt;
}

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool valid() const {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
  }
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Kick-off time. Only hour resolution matters to the model; minutes are kept
/// for display.
struct DateTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;

  friend auto operator<=>(const DateTime&, const DateTime&) = default;

  std::chrono::year_month_day date() const {
    return std::chrono::year{year} / std::chrono::month{static_cast<unsigned>(month)} /
           std::chrono::day{static_cast<unsigned>(day)};
  }

  /// 0 = Monday ... 6 = Sunday.
  int day_of_week() const {
    const std::chrono::weekday wd{std::chrono::sys_days{date()}};
    return static_cast<int>(wd.iso_encoding()) - 1;
  }

  std::string to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d", year, month, day, hour, minute);
    return buf;
  }

  /// Accepts `YYYY-MM-DDTHH:MM[:SS][Z]`, with `T` or a space as separator.
  static std::optional<DateTime> parse(std::string_view s) {
    if (s.size() < 16) return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
      int v = 0;
      for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
      }
      out = v;
      return true;
    };
    DateTime dt;
    if (!num(0, 4, dt.year) || s[4] != '-' || !num(5, 2, dt.month) || s[7] != '-' ||
        !num(8, 2, dt.day) || (s[10] != 'T' && s[10] != ' ') || !num(11, 2, dt.hour) ||
        s[13] != ':' || !num(14, 2, dt.minute))
      return std::nullopt;
    std::string_view rest = s.substr(16);
    if (rest.size() >= 3 && rest[0] == ':') {
      int sec = 0;
      if (!num(17, 2, sec) || sec > 59) return std::nullopt;
      rest = rest.substr(3);
    }
    if (!rest.empty() && rest != "Z") return std::nullopt;
    if (!dt.date().ok() || dt.hour > 23 || dt.minute > 59) return std::nullopt;
    return dt;
  }
};

struct RawMatch {
  std::string match_id;
  DateTime date_time;
  std::string competition;
  std::string home_team;
  std::string away_team;
  GeoPoint home_location;
  GeoPoint away_location;
  GeoPoint match_location;
  std::vector<std::string> home_lineup;
  std::vector<std::string> away_lineup;
  std::optional<int> home_goals;
  std::optional<int> away_goals;
  Category category = Category::clubs;
  Gender gender = Gender::men;
  std::string season;

  // Externally estimated strengths; absent values fall back to the history estimator.
  std::optional<double> attack_home;
  std::optional<double> attack_away;
  std::optional<double> defense_home;
  std::optional<double> defense_away;

  // Provenance only; the model ignores it.
  bool home_lineup_imputed = false;
  bool away_lineup_imputed = false;

  bool has_score() const { return home_goals.has_value() && away_goals.has_value(); }
  bool lineups_nonempty() const { return !home_lineup.empty() && !away_lineup.empty(); }

  friend bool operator==(const RawMatch&, const RawMatch&) = default;
};

struct Dataset {
  std::vector<RawMatch> matches;
  Category category = Category::clubs;
  Gender gender = Gender::men;

  std::size_t size() const { return matches.size(); }
  bool empty() const { return matches.empty(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace detail {

inline GeoPoint parse_location(const json& j, std::size_t row, const std::string& field) {
  GeoPoint p;
  try {
    if (j.is_array() && j.size() == 2) {
      p = {j[0].get<double>(), j[1].get<double>()};
    } else if (j.is_object()) {
      p = {j.at("lat").get<double>(), j.at("lon").get<double>()};
    } else {
      throw SchemaError(row, field, "expected [lat, lon] or {\"lat\", \"lon\"}");
    }
  } catch (const json::exception&) {
    throw SchemaError(row, field, "expected numeric coordinates");
  }
  if (!p.valid()) throw SchemaError(row, field, "coordinates out of range");
  return p;
}

inline std::vector<std::string> parse_lineup(const json& j, std::size_t row,
                                             const std::string& field) {
  if (j.is_null()) return {};
  if (!j.is_array()) throw SchemaError(row, field, "expected a list of player names");
  std::vector<std::string> out;
  for (const auto& name : j) {
    if (!name.is_string()) throw SchemaError(row, field, "player names must be strings");
    out.push_back(name.get<std::string>());
  }
  if (out.size() > kMaxLineup)
    throw SchemaError(row, field, "lineup longer than " + std::to_string(kMaxLineup));
  return out;
}

inline std::optional<int> parse_goals(const json& obj, std::size_t row, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() || it->get<long long>() < 0)
    throw SchemaError(row, field, "expected a nonnegative integer");
  return static_cast<int>(it->get<long long>());
}

inline std::optional<double> parse_opt_real(const json& obj, std::size_t row, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number() || !std::isfinite(it->get<double>()))
    throw SchemaError(row, field, "expected a real number");
  return it->get<double>();
}

inline std::string parse_string(const json& obj, std::size_t row, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(row, field, "missing");
  if (!it->is_string()) throw SchemaError(row, field, "expected a string");
  return it->get<std::string>();
}

inline json location_to_json(const GeoPoint& p) { return json::array({p.lat, p.lon}); }

}  // namespace detail

/// Parses one match object. `row` is used for diagnostics only.
inline RawMatch match_from_json(const json& obj, std::size_t row) {
  using namespace detail;
  if (!obj.is_object()) throw SchemaError(row, "<record>", "expected a JSON object");
  RawMatch m;
  m.match_id = parse_string(obj, row, "match_id");
  const auto dt = DateTime::parse(parse_string(obj, row, "date_time"));
  if (!dt) throw SchemaError(row, "date_time", "expected YYYY-MM-DDTHH:MM");
  m.date_time = *dt;
  m.competition = parse_string(obj, row, "competition");
  m.home_team = parse_string(obj, row, "home_team");
  m.away_team = parse_string(obj, row, "away_team");
  for (auto [field, dst] : {std::pair{"home_location", &m.home_location},
                            std::pair{"away_location", &m.away_location},
                            std::pair{"match_location", &m.match_location}}) {
    auto it = obj.find(field);
    if (it == obj.end()) throw SchemaError(row, field, "missing");
    *dst = parse_location(*it, row, field);
  }
  m.home_lineup = parse_lineup(obj.value("home_lineup", json()), row, "home_lineup");
  m.away_lineup = parse_lineup(obj.value("away_lineup", json()), row, "away_lineup");
  m.home_goals = parse_goals(obj, row, "home_goals");
  m.away_goals = parse_goals(obj, row, "away_goals");
  if (m.home_goals.has_value() != m.away_goals.has_value())
    throw SchemaError(row, m.home_goals ? "away_goals" : "home_goals",
                      "goals must be given for both teams or neither");
  const auto cat = parse_category(parse_string(obj, row, "category"));
  if (!cat) throw SchemaError(row, "category", "expected 'clubs' or 'national'");
  m.category = *cat;
  const auto gen = parse_gender(parse_string(obj, row, "gender"));
  if (!gen) throw SchemaError(row, "gender", "expected 'men' or 'women'");
  m.gender = *gen;
  m.season = parse_string(obj, row, "season");
  m.attack_home = parse_opt_real(obj, row, "attack_home");
  m.attack_away = parse_opt_real(obj, row, "attack_away");
  m.defense_home = parse_opt_real(obj, row, "defense_home");
  m.defense_away = parse_opt_real(obj, row, "defense_away");
  m.home_lineup_imputed = obj.value("home_lineup_imputed", false);
  m.away_lineup_imputed = obj.value("away_lineup_imputed", false);
  return m;
}

inline json match_to_json(const RawMatch& m) {
  json j;
  j["match_id"] = m.match_id;
  j["date_time"] = m.date_time.to_string();
  j["competition"] = m.competition;
  j["home_team"] = m.home_team;
  j["away_team"] = m.away_team;
  j["home_location"] = detail::location_to_json(m.home_location);
  j["away_location"] = detail::location_to_json(m.away_location);
  j["match_location"] = detail::location_to_json(m.match_location);
  j["home_lineup"] = m.home_lineup;
  j["away_lineup"] = m.away_lineup;
  j["home_goals"] = m.home_goals ? json(*m.home_goals) : json();
  j["away_goals"] = m.away_goals ? json(*m.away_goals) : json();
  j["category"] = to_string(m.category);
  j["gender"] = to_string(m.gender);
  j["season"] = m.season;
  if (m.attack_home) j["attack_home"] = *m.attack_home;
  if (m.attack_away) j["attack_away"] = *m.attack_away;
  if (m.defense_home) j["defense_home"] = *m.defense_home;
  if (m.defense_away) j["defense_away"] = *m.defense_away;
  if (m.home_lineup_imputed) j["home_lineup_imputed"] = true;
  if (m.away_lineup_imputed) j["away_lineup_imputed"] = true;
  return j;
}

/// Parses line-delimited JSON. Blank lines are skipped; rows are 1-based line numbers.
inline std::vector<RawMatch> parse_jsonl(std::istream& in) {
  std::vector<RawMatch> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(row, "<record>", std::string("invalid JSON: ") + e.what());
    }
    out.push_back(match_from_json(obj, row));
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw SchemaError(row, "<record>", "unterminated quoted field");
  cells.push_back(std::move(cur));
  return cells;
}

inline std::vector<std::string> split_names(const std::string& cell) {
  std::vector<std::string> out;
  if (cell.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto bar = cell.find('|', start);
    out.push_back(cell.substr(start, bar - start));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

}  // namespace detail

/// CSV adapter. Columns carry the JSON field names, except locations which are
/// split into `<prefix>_lat` / `<prefix>_lon`; lineups are `|`-joined names and
/// empty cells mean "absent".
inline std::vector<RawMatch> parse_csv(std::istream& in) {
  std::vector<RawMatch> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  const auto header = detail::split_csv_line(line, 1);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line, row);
    if (cells.size() != header.size())
      throw SchemaError(row, "<record>",
                        "expected " + std::to_string(header.size()) + " columns, got " +
                            std::to_string(cells.size()));
    json obj = json::object();
    std::map<std::string, json> locs;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string& key = header[c];
      const std::string& cell = cells[c];
      auto number = [&]() -> json {
        try {
          std::size_t used = 0;
          if (key.ends_with("_goals")) {
            const long long v = std::stoll(cell, &used);
            if (used != cell.size()) throw std::invalid_argument(key);
            return v;
          }
          const double v = std::stod(cell, &used);
          if (used != cell.size()) throw std::invalid_argument(key);
          return v;
        } catch (const std::exception&) {
          throw SchemaError(row, key, "expected a number");
        }
      };
      if (key.ends_with("_lat") || key.ends_with("_lon")) {
        const std::string prefix = key.substr(0, key.size() - 4) + "_location";
        if (!locs.contains(prefix)) locs[prefix] = json::object();
        locs[prefix][key.substr(key.size() - 3)] = cell.empty() ? json() : number();
      } else if (key == "home_lineup" || key == "away_lineup") {
        obj[key] = detail::split_names(cell);
      } else if (cell.empty()) {
        // absent
      } else if (key.ends_with("_goals") || key.starts_with("attack_") ||
                 key.starts_with("defense_")) {
        obj[key] = number();
      } else if (key.ends_with("_imputed")) {
        obj[key] = (cell == "true" || cell == "1");
      } else {
        obj[key] = cell;
      }
    }
    for (auto& [k, v] : locs) obj[k] = v;
    out.push_back(match_from_json(obj, row));
  }
  return out;
}

inline void sort_by_date(std::vector<RawMatch>& matches) {
  std::stable_sort(matches.begin(), matches.end(),
                   [](const RawMatch& a, const RawMatch& b) { return a.date_time < b.date_time; });
}

/// Reads every record from a `.csv` or line-delimited JSON file, sorted by kick-off.
inline std::vector<RawMatch> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open match file: " + path.string());
  auto records = path.extension() == ".csv" ? parse_csv(in) : parse_jsonl(in);
  sort_by_date(records);
  return records;
}

/// Builds a dataset from records that must all share category and gender.
inline Dataset make_dataset(std::vector<RawMatch> records) {
  Dataset d;
  if (!records.empty()) {
    d.category = records.front().category;
    d.gender = records.front().gender;
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].category != d.category || records[i].gender != d.gender)
      throw DataError("match '" + records[i].match_id +
                      "' differs in category/gender from the rest of the dataset");
  }
  sort_by_date(records);
  d.matches = std::move(records);
  return d;
}

inline Dataset load_matches(const std::filesystem::path& path) {
  return make_dataset(load_records(path));
}

/// Loads only the records of one category and gender.
inline Dataset load_matches(const std::filesystem::path& path, Category category, Gender gender) {
  Dataset d;
  d.category = category;
  d.gender = gender;
  for (auto& m : load_records(path))
    if (m.category == category && m.gender == gender) d.matches.push_back(std::move(m));
  return d;
}

/// Remote match provider. Implementations must be safe to call concurrently.
class MatchSource {
 public:
  virtual ~MatchSource() = default;
  virtual std::vector<RawMatch> fetch(Category category, Gender gender, const DateTime& from,
                                      const DateTime& to) const = 0;
};

/// File-backed stand-in for the match API.
class FileMatchSource final : public MatchSource {
 public:
  explicit FileMatchSource(const std::filesystem::path& path) : records_(load_records(path)) {}
  explicit FileMatchSource(std::vector<RawMatch> records) : records_(std::move(records)) {
    sort_by_date(records_);
  }

  std::vector<RawMatch> fetch(Category category, Gender gender, const DateTime& from,
                              const DateTime& to) const override {
    std::vector<RawMatch> out;
    for (const auto& m : records_)
      if (m.category == category && m.gender == gender && m.date_time >= from &&
          m.date_time <= to)
        out.push_back(m);
    return out;
  }

 private:
  std::vector<RawMatch> records_;
};

inline Dataset load_matches(const MatchSource& source, Category category, Gender gender,
                            const DateTime& from, const DateTime& to) {
  Dataset d;
  d.category = category;
  d.gender = gender;
  d.matches = source.fetch(category, gender, from, to);
  for (const auto& m : d.matches)
    if (m.category != category || m.gender != gender)
      throw DataError("match source returned '" + m.match_id + "' outside the requested selection");
  sort_by_date(d.matches);
  return d;
}

/// Fills empty lineups with the team's most recent earlier non-empty lineup of
/// the same season. Expects `dataset` sorted by kick-off.
inline Dataset impute_lineups(Dataset dataset) {
  std::map<std::pair<std::string, std::string>, const std::vector<std::string>*> last;
  // Pointers into `dataset.matches` stay valid: the vector is not resized below.
  for (auto& m : dataset.matches) {
    auto fill = [&](const std::string& team, std::vector<std::string>& lineup, bool& imputed) {
      const auto key = std::make_pair(team, m.season);
      if (lineup.empty()) {
        if (auto it = last.find(key); it != last.end()) {
          lineup = *it->second;
          imputed = true;
        }
      } else {
        last[key] = &lineup;
      }
    };
    fill(m.home_team, m.home_lineup, m.home_lineup_imputed);
    fill(m.away_team, m.away_lineup, m.away_lineup_imputed);
  }
  return dataset;
}

/// Keeps matches where both lineups are known. Intended for clubs data.
inline Dataset filter_nonempty_lineups(Dataset dataset) {
  std::erase_if(dataset.matches, [](const RawMatch& m) { return !m.lineups_nonempty(); });
  return dataset;
}

/// Chronological split: the first floor(n * ratio) matches train, the rest
/// validate. With `shuffled`, membership is drawn from `seed` instead, and each
/// part keeps chronological order.
inline std::pair<Dataset, Dataset> split_train_validation(const Dataset& dataset, double ratio,
                                                          std::uint64_t seed = 0,
                                                          bool shuffled = false) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split ratio must lie in (0, 1), got " + std::to_string(ratio));
  if (dataset.empty()) throw DataError("cannot split an empty dataset");
  const std::size_t n = dataset.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (shuffled) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  }
  Dataset train{{}, dataset.category, dataset.gender};
  Dataset val{{}, dataset.category, dataset.gender};
  for (std::size_t k = 0; k < n; ++k)
    (k < n_train ? train : val).matches.push_back(dataset.matches[order[k]]);
  return {std::move(train), std::move(val)};
}

}  // namespace hbo
