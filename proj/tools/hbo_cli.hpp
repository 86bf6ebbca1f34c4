#pragma once

// Command implementations for the `hbo` executable. Kept in a header so the
// test suite can drive the CLI in-process through `hbo::cli::run`.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hbo/explain.hpp"
#include "hbo/ingest.hpp"
#include "hbo/pipeline.hpp"
#include "hbo/report.hpp"
#include "hbo/serialize.hpp"
#include "hbo/synthetic.hpp"
#include "hbo/tournament.hpp"
#include "hbo/train.hpp"

namespace hbo::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfig = 1, kData = 2, kService = 3 };

// ---------------------------------------------------------------------------
// Configuration: flat `key = value` file; flags > file > environment > defaults.
// Environment overrides use HBO_<KEY> with dots replaced by underscores, e.g.
// HBO_MODEL_SEED. ORACLE_LLM_URL and ORACLE_LLM_TOKEN are honoured as well.

/// Keys understood by the CLI, with their defaults.
inline const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> d{
      {"data.clubs", ""},
      {"data.national", ""},
      {"roster", ""},
      {"output_dir", "."},
      {"model.embedding_dim", "25"},
      {"model.hidden_sizes", "256,128,64"},
      {"model.learning_rate", "0.001"},
      {"model.batch_size", "64"},
      {"model.max_epochs", "100"},
      {"model.patience", "1"},
      {"model.seed", "0"},
      {"train.ratio", "0.8"},
      {"train.strength_window", "10"},
      {"train.target_scale", "50"},
      {"explain.steps", "200"},
      {"llm.url", ""},
      {"llm.token", ""},
      {"llm.model", "mistral-7b-instruct"},
      {"llm.max_tokens", "1024"},
      {"llm.temperature", "0.2"},
      {"llm.timeout", "120"},
      {"llm.max_in_flight", "4"},
      {"tournament", ""},
  };
  return d;
}

class AppConfig {
 public:
  AppConfig() : values_(config_defaults()) {}

  /// Applies environment overrides on top of the defaults.
  void apply_env() {
    for (auto& [key, value] : values_) {
      std::string name = "HBO_";
      for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (const char* v = std::getenv(name.c_str())) value = v;
    }
    if (const char* v = std::getenv("ORACLE_LLM_URL"); v && values_["llm.url"].empty()) values_["llm.url"] = v;
    if (const char* v = std::getenv("ORACLE_LLM_TOKEN"); v && values_["llm.token"].empty()) values_["llm.token"] = v;
  }

  void apply_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key = value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  double real(const std::string& key) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(str(key), &used);
      if (used != str(key).size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::logic_error&) {
      throw ConfigError("config key '" + key + "' expects a number, got '" + str(key) + "'");
    }
  }

  std::size_t count(const std::string& key) const {
    const double v = real(key);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw ConfigError("config key '" + key + "' expects a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::vector<std::size_t> counts(const std::string& key) const {
    std::vector<std::size_t> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(static_cast<std::size_t>(std::stoul(trim(item))));
      } catch (const std::logic_error&) {
        throw ConfigError("config key '" + key + "' expects a comma-separated list of integers");
      }
    }
    return out;
  }

  ModelConfig model_config() const {
    ModelConfig c;
    c.embedding_dim = count("model.embedding_dim");
    c.hidden_sizes = counts("model.hidden_sizes");
    c.learning_rate = real("model.learning_rate");
    c.batch_size = count("model.batch_size");
    c.max_epochs = count("model.max_epochs");
    c.patience = count("model.patience");
    c.seed = count("model.seed");
    c.validate();
    return c;
  }

  CompletionConfig completion_config() const {
    CompletionConfig c;
    c.endpoint = str("llm.url");
    c.token = str("llm.token");
    c.model = str("llm.model");
    c.max_tokens = static_cast<int>(count("llm.max_tokens"));
    c.temperature = real("llm.temperature");
    c.timeout_seconds = real("llm.timeout");
    c.max_in_flight = static_cast<int>(count("llm.max_in_flight"));
    c.validate();
    return c;
  }

  fs::path output_dir() const {
    fs::path dir = str("output_dir");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
  }

  std::optional<Roster> roster() const {
    if (str("roster").empty()) return std::nullopt;
    return Roster::load(str("roster"));
  }

 private:
  static std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Helpers

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " is required");
  if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " not found: " + path);
}

/// A match file holds one JSON object, a JSON array, or JSON lines.
inline std::vector<RawMatch> load_match_file(const std::string& path) {
  require_file(path, "match file");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DataError("match file is not valid JSON: " + std::string(e.what()));
    }
    std::vector<RawMatch> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(match_from_json(j[i], i + 1));
    return out;
  }
  if (fs::path(path).extension() == ".csv") return load_records(path);
  // A single pretty-printed object is valid JSON but not valid JSON lines.
  try {
    const json j = json::parse(text);
    if (j.is_object()) return {match_from_json(j, 1)};
  } catch (const json::parse_error&) {
  }
  std::istringstream lines(text);
  return parse_jsonl(lines);
}

inline const RawMatch& pick_match(const std::vector<RawMatch>& matches, const std::string& id) {
  if (matches.empty()) throw DataError("match file contains no matches");
  if (id.empty()) return matches.front();
  for (const auto& m : matches)
    if (m.match_id == id) return m;
  throw DataError("no match with id '" + id + "'");
}

inline std::string format2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// Commands

struct TrainArgs {
  std::string category = "national";
  std::string gender = "men";
  std::string data;
  std::string transfer_from;
};

inline int cmd_train(const AppConfig& cfg, const TrainArgs& a, std::ostream& out, std::ostream& log) {
  const auto category = parse_category(a.category);
  const auto gender = parse_gender(a.gender);
  if (!category) throw ConfigError("--category must be clubs or national");
  if (!gender) throw ConfigError("--gender must be men or women");
  ModelConfig mc = cfg.model_config();
  const std::string data = !a.data.empty() ? a.data : cfg.str("data." + to_string(*category));
  require_file(data, "data file");
  std::optional<ModelBundle> source;
  if (!a.transfer_from.empty()) {
    require_file(a.transfer_from, "transfer source model");
    source = load_bundle(a.transfer_from);
    if (source->model.config.embedding_dim != mc.embedding_dim)
      throw ConfigError("transfer source has embedding_dim " +
                        std::to_string(source->model.config.embedding_dim) + ", expected " +
                        std::to_string(mc.embedding_dim));
  }
  const auto roster = cfg.roster();
  const fs::path dir = cfg.output_dir();

  const Dataset dataset = load_matches(data, *category, *gender);
  if (dataset.empty())
    throw DataError("no " + to_string(*category) + "/" + to_string(*gender) + " matches in " + data);
  PrepareOptions po;
  po.train_ratio = cfg.real("train.ratio");
  po.strength_window = cfg.count("train.strength_window");
  po.target_scale = cfg.real("train.target_scale");
  po.roster = roster ? &*roster : nullptr;
  const PreparedData prep = prepare_training(dataset, po);
  log << "train: " << prep.train.size() << " training and " << prep.validation.size()
      << " validation matches, " << prep.vocab.size() << " players\n";

  mc.vocab_size = prep.vocab.size();
  ScoreModel model = init_model(mc, prep.stats);
  if (source) {
    model = transfer_init(std::move(model), source->model, source->vocab, prep.vocab);
    log << "train: embedding initialized from " << a.transfer_from << "\n";
  }
  auto [best, history] = train(std::move(model), prep.train, prep.validation,
                               [&](std::size_t epoch, const EpochLoss& l) {
                                 log << "epoch " << epoch << "  train " << l.train_loss
                                     << "  validation " << l.validation_loss << "\n";
                               });

  save_bundle({best, prep.vocab, prep.strengths}, dir / "model.bin");
  std::ofstream hist(dir / "history.csv", std::ios::trunc);
  if (!hist) throw DataError("cannot write " + (dir / "history.csv").string());
  hist << "epoch,train_loss,test_loss\n";
  for (std::size_t i = 0; i < history.epochs.size(); ++i)
    hist << (i + 1) << ',' << format_shortest(history.epochs[i].train_loss) << ','
         << format_shortest(history.epochs[i].validation_loss) << '\n';

  const Metrics m = evaluate(best, prep.validation);
  out << "best epoch " << history.best_epoch << " of " << history.epochs.size()
      << ", validation loss " << format_shortest(history.best_validation_loss()) << "\n"
      << "validation RMSE home " << format2(m.rmse_home) << ", away " << format2(m.rmse_away)
      << "; MAPE home " << format2(100 * m.mape_home) << "%, away " << format2(100 * m.mape_away)
      << "%\n"
      << "wrote " << (dir / "model.bin").string() << " and " << (dir / "history.csv").string() << "\n";
  return kOk;
}

struct MatchArgs {
  std::string model;
  std::string match;
  std::string match_id;
};

inline Predictor load_predictor(const AppConfig& cfg, const std::string& model_path) {
  require_file(model_path, "model file");
  return Predictor(load_bundle(model_path), cfg.roster());
}

inline json prediction_json(const RawMatch& m, const ScorePrediction& p) {
  return {{"match_id", m.match_id},
          {"home_team", m.home_team},
          {"away_team", m.away_team},
          {"home", p.home},
          {"away", p.away},
          {"raw_home", p.raw_home},
          {"raw_away", p.raw_away}};
}

inline int cmd_predict(const AppConfig& cfg, const MatchArgs& a, bool as_json, std::ostream& out) {
  const Predictor predictor = load_predictor(cfg, a.model);
  const auto matches = load_match_file(a.match);
  if (matches.empty()) throw DataError("match file contains no matches");
  json all = json::array();
  for (const auto& m : matches) {
    if (!a.match_id.empty() && m.match_id != a.match_id) continue;
    const auto p = predictor.predict(m);
    if (as_json) {
      all.push_back(prediction_json(m, p));
    } else {
      out << m.home_team << ' ' << p.home << " - " << p.away << ' ' << m.away_team << "  (raw "
          << format2(p.raw_home) << " - " << format2(p.raw_away) << ")\n";
    }
  }
  if (as_json) out << all.dump(2) << '\n';
  return kOk;
}

struct ExplainArgs : MatchArgs {
  std::string team = "home";
  std::optional<int> steps;
};

inline TeamSide resolve_side(const std::string& team, const RawMatch& m) {
  if (auto s = parse_team_side(team)) return *s;
  if (team == m.home_team) return TeamSide::home;
  if (team == m.away_team) return TeamSide::away;
  throw ConfigError("--team must be home, away, '" + m.home_team + "' or '" + m.away_team + "'");
}

inline AttributionReport explain_match(const Predictor& predictor, const RawMatch& m, TeamSide side,
                                       int steps) {
  const auto f = predictor.features(m);
  const auto& model = predictor.bundle().model;
  const auto raw = integrated_gradients(model, f, side, steps, default_baseline(model));
  return build_report(raw, f, predictor.bundle().vocab, predictor.roster(), m, side);
}

inline int cmd_explain(const AppConfig& cfg, const ExplainArgs& a, std::ostream& out) {
  const int steps = a.steps ? *a.steps : static_cast<int>(cfg.count("explain.steps"));
  if (steps < 1) throw ConfigError("--steps must be >= 1");
  const Predictor predictor = load_predictor(cfg, a.model);
  const auto matches = load_match_file(a.match);
  const RawMatch& m = pick_match(matches, a.match_id);
  const TeamSide side = resolve_side(a.team, m);
  const fs::path dir = cfg.output_dir();

  const AttributionReport r = explain_match(predictor, m, side, steps);
  export_attributions(r, dir / "attributions.csv");
  write_text(dir / "attributions.json", report_to_json(r).dump(2) + "\n");
  out << "explained " << to_string(side) << " goals of " << m.home_team << " vs " << m.away_team
      << " with " << steps << " steps\n"
      << "output " << format_shortest(r.input_output) << ", baseline "
      << format_shortest(r.baseline_output) << "\n"
      << "completeness residual " << format_shortest(r.residual()) << "\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, r.entries.size()); ++i)
    out << "  " << r.entries[i].label() << ": " << format_fixed4(r.entries[i].attribution) << "\n";
  return kOk;
}

inline int cmd_report(const AppConfig& cfg, const ExplainArgs& a, std::ostream& out, std::ostream& log) {
  // Endpoint problems must surface before any computation.
  const CompletionConfig cc = cfg.completion_config();
  const int steps = a.steps ? *a.steps : static_cast<int>(cfg.count("explain.steps"));
  if (steps < 1) throw ConfigError("--steps must be >= 1");
  const Predictor predictor = load_predictor(cfg, a.model);
  const auto matches = load_match_file(a.match);
  const RawMatch& m = pick_match(matches, a.match_id);
  const TeamSide side = resolve_side(a.team, m);
  const fs::path dir = cfg.output_dir();

  const auto prediction = predictor.predict(m);
  const AttributionReport r = explain_match(predictor, m, side, steps);
  const PromptTemplate& tmpl = PromptTemplate::defaults();
  PromptBundle b;
  b.info = render_match_info(m, prediction);
  b.feat = render_feature_descriptions();
  b.explain = render_explain_section(r);
  b.team = side == TeamSide::home ? m.home_team : m.away_team;
  b.examples = tmpl.default_examples;
  const std::string prompt = build_prompt(b, tmpl);
  write_text(dir / "prompt.txt", prompt);
  log << "report: prompt written to " << (dir / "prompt.txt").string() << "\n";

  const std::string report = generate_report(prompt, cc);
  write_text(dir / "report.txt", report);
  out << report;
  if (report.empty() || report.back() != '\n') out << '\n';
  return kOk;
}

struct SimulateArgs {
  std::string model;
  std::string tournament;
  std::string score_table;
};

inline int cmd_simulate(const AppConfig& cfg, const SimulateArgs& a, std::ostream& out) {
  const std::string tpath = !a.tournament.empty() ? a.tournament : cfg.str("tournament");
  require_file(tpath, "tournament file");
  const auto def = TournamentDefinition::load(tpath);
  std::optional<TableScorer> table;
  if (!a.score_table.empty()) {
    require_file(a.score_table, "score table");
    table = TableScorer::load(a.score_table);
  }
  std::optional<Predictor> predictor;
  if (!a.model.empty()) predictor.emplace(load_predictor(cfg, a.model));
  if (!table && !predictor) throw ConfigError("simulate needs --model or --score-table");
  const fs::path dir = cfg.output_dir();

  const MatchScorer scorer = [&](const RawMatch& m) -> MatchScore {
    if (table)
      if (auto s = table->find(m.home_team, m.away_team)) return *s;
    if (!predictor) throw DataError("no score for " + m.home_team + " vs " + m.away_team);
    const auto p = predictor->predict(m);
    return {p.home, p.away, p.raw_home, p.raw_away};
  };
  const TournamentState state = simulate_tournament(def, scorer);
  const json j = tournament_to_json(state);
  write_text(dir / "standings.json", j["groups"].dump(2) + "\n");
  write_text(dir / "bracket.json",
             json{{"knockout", j["knockout"]}, {"medals", j["medals"]}}.dump(2) + "\n");
  const std::string text = tournament_to_text(state);
  write_text(dir / "tournament.txt", text);
  out << text;
  return kOk;
}

struct SynthArgs {
  std::uint64_t seed = 1;
  std::size_t national_matches = 400;
  std::string gender = "men";
};

inline int cmd_synth(const AppConfig& cfg, const SynthArgs& a, std::ostream& out) {
  const auto gender = parse_gender(a.gender);
  if (!gender) throw ConfigError("--gender must be men or women");
  SyntheticOptions o;
  o.seed = a.seed;
  o.gender = *gender;
  o.national_matches = a.national_matches;
  const auto u = make_synthetic_universe(o);
  const fs::path dir = cfg.output_dir();
  for (const auto& [name, d] : {std::pair{"clubs.jsonl", &u.clubs}, std::pair{"national.jsonl", &u.national}}) {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw DataError("cannot write " + (dir / name).string());
    for (const auto& m : d->matches) f << match_to_json(m).dump() << '\n';
  }
  write_text(dir / "roster.json", u.roster.to_json().dump(2) + "\n");
  out << "wrote " << u.clubs.size() << " club and " << u.national.size() << " national matches to "
      << dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Handball score prediction, attribution, match reports and tournament simulation"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::string roster;
  app.add_option("--config", config_file, "flat key = value config file");
  app.add_option("--set", overrides, "override a config key, key=value (repeatable)");
  app.add_option("--output-dir", output_dir, "directory for artifacts");
  app.add_option("--roster", roster, "player roster JSON (positions, clubs)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model on one category/gender selection");
  train_cmd->add_option("--category", ta.category, "clubs or national")->required();
  train_cmd->add_option("--gender", ta.gender, "men or women")->required();
  train_cmd->add_option("--data", ta.data, "match file (JSON lines or CSV)");
  train_cmd->add_option("--transfer-from", ta.transfer_from, "clubs model whose embeddings seed this one");
  std::optional<std::uint64_t> seed;
  train_cmd->add_option("--seed", seed, "model seed");

  MatchArgs pa;
  bool as_json = false;
  auto* predict_cmd = app.add_subcommand("predict", "predict scores for the matches in a file");
  predict_cmd->add_option("--model", pa.model, "model file")->required();
  predict_cmd->add_option("--match", pa.match, "match file")->required();
  predict_cmd->add_option("--match-id", pa.match_id, "only this match");
  predict_cmd->add_flag("--json", as_json, "print JSON");

  ExplainArgs ea;
  auto* explain_cmd = app.add_subcommand("explain", "integrated-gradients attributions for one match");
  auto* report_cmd = app.add_subcommand("report", "write a match report through the completion endpoint");
  for (auto* c : {explain_cmd, report_cmd}) {
    c->add_option("--model", ea.model, "model file")->required();
    c->add_option("--match", ea.match, "match file")->required();
    c->add_option("--match-id", ea.match_id, "match to explain (default: first)");
    c->add_option("--team", ea.team, "home, away or a team name");
    c->add_option("--steps", ea.steps, "integration steps");
  }

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate a 12-team tournament");
  simulate_cmd->add_option("--model", sa.model, "national model file");
  simulate_cmd->add_option("--tournament", sa.tournament, "tournament definition");
  simulate_cmd->add_option("--score-table", sa.score_table, "fixed scores that take precedence over the model");

  SynthArgs ya;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic clubs/national data set");
  synth_cmd->add_option("--seed", ya.seed, "generator seed");
  synth_cmd->add_option("--national-matches", ya.national_matches, "number of national matches");
  synth_cmd->add_option("--gender", ya.gender, "men or women");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    AppConfig cfg;
    cfg.apply_env();
    if (!config_file.empty()) cfg.apply_file(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!output_dir.empty()) cfg.set("output_dir", output_dir);
    if (!roster.empty()) cfg.set("roster", roster);
    if (seed) cfg.set("model.seed", std::to_string(*seed));
    if (!cfg.str("roster").empty()) require_file(cfg.str("roster"), "roster file");

    if (*train_cmd) return cmd_train(cfg, ta, out, err);
    if (*predict_cmd) return cmd_predict(cfg, pa, as_json, out);
    if (*explain_cmd) return cmd_explain(cfg, ea, out);
    if (*report_cmd) return cmd_report(cfg, ea, out, err);
    if (*simulate_cmd) return cmd_simulate(cfg, sa, out);
    if (*synth_cmd) return cmd_synth(cfg, ya, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ServiceError& e) {
    err << "service error: " << e.what() << "\n";
    return kService;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kConfig;
}

}  // namespace hbo::cli
