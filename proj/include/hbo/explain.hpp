#pragma once

// Integrated Gradients over the first-layer input space. Lineup tokens are
// explained through their embedded vectors: the path runs from the baseline
// rows to the actual rows, and a token's attribution is the signed sum of its
// embedding coordinates' attributions.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hbo/features.hpp"
#include "hbo/ingest.hpp"
#include "hbo/model.hpp"

namespace hbo {

enum class TeamSide { home, away };

inline std::string to_string(TeamSide s) { return s == TeamSide::home ? "home" : "away"; }

inline std::optional<TeamSide> parse_team_side(std::string_view s) {
  if (s == "home") return TeamSide::home;
  if (s == "away") return TeamSide::away;
  return std::nullopt;
}

inline constexpr int kDefaultIgSteps = 200;

/// Midpoint Riemann approximation of the path integral of `grad` from
/// `baseline` to `x`, multiplied elementwise by (x - baseline).
template <typename GradFn>
Vector integrated_gradients_path(GradFn&& grad, const Vector& x, const Vector& baseline, int steps) {
  if (steps < 1) throw ConfigError("integrated gradients needs steps >= 1");
  if (x.size() != baseline.size()) throw DataError("input and baseline differ in shape");
  const Vector diff = x - baseline;
  Vector total = Vector::Zero(x.size());
  for (int k = 1; k <= steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / static_cast<double>(steps);
    total += grad(Vector(baseline + alpha * diff));
  }
  return diff.cwiseProduct(total) / static_cast<double>(steps);
}

/// Attributions in model slot order: `tokens[k]` for lineup slot k, then covariates.
struct RawAttribution {
  std::vector<double> tokens;
  std::vector<double> covariates;
  double input_output = 0.0;
  double baseline_output = 0.0;

  std::size_t size() const { return tokens.size() + covariates.size(); }

  double sum() const {
    double s = 0.0;
    for (double v : tokens) s += v;
    for (double v : covariates) s += v;
    return s;
  }

  /// |sum of attributions - (F(input) - F(baseline))|
  double residual() const { return std::abs(sum() - (input_output - baseline_output)); }
};

/// Null lineup and covariates at their training means (standardized zero).
inline FeatureVector default_baseline(const NormalizationStats& stats,
                                      std::size_t lineup_len = kLineupSlots) {
  return {std::vector<double>(stats.dims(), 0.0), std::vector<TokenId>(lineup_len, 0)};
}

inline FeatureVector default_baseline(const ScoreModel& model) {
  return default_baseline(model.stats, model.config.lineup_len);
}

inline RawAttribution integrated_gradients(const ScoreModel& model, const FeatureVector& f,
                                           TeamSide target, int steps,
                                           const FeatureVector& baseline) {
  if (f.tokens.size() != baseline.tokens.size() || f.covariates.size() != baseline.covariates.size())
    throw DataError("input and baseline differ in shape");
  const int which = target == TeamSide::home ? 0 : 1;
  const Vector x = input_vector(model, f);
  const Vector x0 = input_vector(model, baseline);
  const Vector ig = integrated_gradients_path(
      [&](const Vector& p) { return input_gradient(model, p, which); }, x, x0, steps);

  RawAttribution out;
  const auto m = static_cast<Eigen::Index>(model.config.embedding_dim);
  for (std::size_t k = 0; k < model.config.lineup_len; ++k)
    out.tokens.push_back(ig.segment(static_cast<Eigen::Index>(k) * m, m).sum());
  const auto off = static_cast<Eigen::Index>(model.config.lineup_len) * m;
  for (std::size_t i = 0; i < model.config.covariate_count; ++i)
    out.covariates.push_back(ig(off + static_cast<Eigen::Index>(i)));
  out.input_output = forward_inputs(model, x)(which, 0);
  out.baseline_output = forward_inputs(model, x0)(which, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Named report

struct AttributionEntry {
  std::string name;
  double attribution = 0.0;
  std::size_t slot = 0;  // 0..lineup_len-1 players, then covariates
  bool is_player = false;
  bool empty_slot = false;
  std::string position;  // players only, when known
  std::string team;      // players only

  /// "Name (position, team)" for players, the plain name otherwise.
  std::string label() const {
    if (!is_player || empty_slot) return name;
    if (!position.empty() && !team.empty()) return name + " (" + position + ", " + team + ")";
    if (!position.empty() || !team.empty()) return name + " (" + position + team + ")";
    return name;
  }
};

struct AttributionReport {
  std::string match_id;
  TeamSide team_explained = TeamSide::home;
  std::vector<AttributionEntry> entries;  // sorted by attribution, descending
  double baseline_output = 0.0;
  double input_output = 0.0;

  double residual() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.attribution;
    return std::abs(s - (input_output - baseline_output));
  }
};

/// Names every slot and sorts by attribution (descending, ties by slot).
inline AttributionReport build_report(const RawAttribution& raw, const FeatureVector& f,
                                      const PlayerVocabulary& vocab, const Roster* roster,
                                      const RawMatch& match, TeamSide team) {
  if (raw.tokens.size() != f.tokens.size() || raw.covariates.size() != kCovariateCount)
    throw DataError("attribution count does not match the 43-input layout");
  AttributionReport r;
  r.match_id = match.match_id;
  r.team_explained = team;
  r.baseline_output = raw.baseline_output;
  r.input_output = raw.input_output;
  const std::size_t half = f.tokens.size() / 2;
  for (std::size_t k = 0; k < f.tokens.size(); ++k) {
    AttributionEntry e;
    e.attribution = raw.tokens[k];
    e.slot = k;
    e.is_player = true;
    const TokenId t = f.tokens[k];
    if (t == 0) {
      e.empty_slot = true;
      e.name = "empty slot " + std::to_string(k + 1);
    } else {
      const auto& meta = vocab.meta(t);  // throws on a corrupt token
      e.name = meta.name;
      e.position = meta.position;
      if (roster)
        if (const auto* re = roster->find(meta.name); re && !re->position.empty())
          e.position = re->position;
      e.team = k < half ? match.home_team : match.away_team;
    }
    r.entries.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < kCovariateCount; ++i) {
    AttributionEntry e;
    e.name = kCovariateNames[i];
    e.attribution = raw.covariates[i];
    e.slot = f.tokens.size() + i;
    r.entries.push_back(std::move(e));
  }
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const AttributionEntry& a, const AttributionEntry& b) {
                     return a.attribution > b.attribution;
                   });
  return r;
}

inline json report_to_json(const AttributionReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json je{{"name", e.name}, {"attribution", e.attribution}, {"slot", e.slot},
            {"kind", e.is_player ? (e.empty_slot ? "empty_slot" : "player") : "covariate"}};
    if (e.is_player && !e.empty_slot) {
      je["position"] = e.position;
      je["team"] = e.team;
    }
    entries.push_back(std::move(je));
  }
  return {{"match_id", r.match_id},
          {"team_explained", to_string(r.team_explained)},
          {"input_output", r.input_output},
          {"baseline_output", r.baseline_output},
          {"completeness_residual", r.residual()},
          {"entries", entries}};
}

// ---------------------------------------------------------------------------
// CSV export: header `x,y`, one `attribution,name` row per entry.

inline std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void export_attributions(const AttributionReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write attribution file: " + path.string());
  out << "x,y\n";
  for (const auto& e : r.entries)
    out << format_shortest(e.attribution) << ',' << detail::csv_field(e.name) << '\n';
  if (!out) throw DataError("failed writing attribution file: " + path.string());
}

/// Reads back an exported attribution file as ordered (attribution, name) pairs.
inline std::vector<std::pair<double, std::string>> read_attributions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open attribution file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,y") throw DataError("attribution file lacks the x,y header");
  std::vector<std::pair<double, std::string>> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto cells = detail::split_csv_line(line, row);
    if (cells.size() != 2) throw SchemaError(row, "<record>", "expected 2 columns");
    double v = 0.0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), v);
    if (res.ec != std::errc{} || res.ptr != cells[0].data() + cells[0].size())
      throw SchemaError(row, "x", "expected a number");
    out.emplace_back(v, cells[1]);
  }
  return out;
}

}  // namespace hbo
