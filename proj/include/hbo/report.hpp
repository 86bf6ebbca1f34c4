#pragma once

// Prompt rendering and the completion-endpoint client used to turn a
// prediction and its attributions into a written match report.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hbo/detail/http.hpp"

#include "hbo/error.hpp"
#include "hbo/explain.hpp"
#include "hbo/ingest_http.hpp"
#include "hbo/model.hpp"

namespace hbo {

// ---------------------------------------------------------------------------
// Assets

/// Directory holding `prompt_template.txt` and `examples/report_*.txt`.
/// `ORACLE_ASSET_DIR` overrides the build-time default.
inline std::filesystem::path asset_dir() {
  if (const char* env = std::getenv("ORACLE_ASSET_DIR"); env && *env) return env;
#ifdef HBO_DEFAULT_ASSET_DIR
  return HBO_DEFAULT_ASSET_DIR;
#else
  return "assets";
#endif
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read asset: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

struct PromptTemplate {
  std::string text;
  std::vector<std::string> default_examples;

  /// Loads the template and every `examples/report_<n>.txt`, n = 1, 2, ...
  static PromptTemplate load(const std::filesystem::path& dir) {
    PromptTemplate t;
    t.text = read_text_file(dir / "prompt_template.txt");
    for (int n = 1;; ++n) {
      const auto p = dir / "examples" / ("report_" + std::to_string(n) + ".txt");
      if (!std::filesystem::exists(p)) break;
      t.default_examples.push_back(strip_trailing_newlines(read_text_file(p)));
    }
    return t;
  }

  static const PromptTemplate& defaults() {
    static const PromptTemplate t = load(asset_dir());
    return t;
  }
};

// ---------------------------------------------------------------------------
// Prompt

struct PromptBundle {
  std::string info;
  std::string feat;
  std::string explain;
  std::string team;
  std::vector<std::string> examples;
};

namespace detail {

inline bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

}  // namespace detail

/// Substitutes `{info}`, `{feat}`, `{explain}`, `{team}` and `{examples}` in a
/// single pass, so braces inside substituted text are left alone. Any other
/// `{identifier}` in the template is an error.
inline std::string build_prompt(const PromptBundle& b, const PromptTemplate& tmpl) {
  for (auto [field, value] : {std::pair{"info", &b.info}, std::pair{"feat", &b.feat},
                              std::pair{"explain", &b.explain}, std::pair{"team", &b.team}})
    if (value->empty()) throw ConfigError(std::string("prompt field '") + field + "' is empty");
  if (b.examples.empty()) throw ConfigError("prompt needs at least one example report");

  std::string examples;
  for (std::size_t i = 0; i < b.examples.size(); ++i) {
    if (i) examples += "\n\n";
    examples += "Report " + std::to_string(i + 1) + ": " + strip_trailing_newlines(b.examples[i]);
  }

  const std::string_view t = tmpl.text;
  std::string out;
  out.reserve(t.size() + b.info.size() + b.feat.size() + b.explain.size() + examples.size());
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] == '{') {
      std::size_t j = i + 1;
      while (j < t.size() && detail::is_placeholder_char(t[j])) ++j;
      if (j < t.size() && t[j] == '}' && j > i + 1) {
        const std::string_view key = t.substr(i + 1, j - i - 1);
        if (key == "info") out += b.info;
        else if (key == "feat") out += b.feat;
        else if (key == "explain") out += b.explain;
        else if (key == "team") out += b.team;
        else if (key == "examples") out += examples;
        else throw ConfigError("unknown placeholder {" + std::string(key) + "} in prompt template");
        i = j + 1;
        continue;
      }
    }
    out += t[i++];
  }
  return out;
}

inline std::string build_prompt(const PromptBundle& b) {
  return build_prompt(b, PromptTemplate::defaults());
}

/// What a positive attribution means for each covariate.
struct CovariateGlossary {
  std::vector<std::pair<std::string, std::string>> items;

  static const CovariateGlossary& defaults() {
    static const CovariateGlossary g{{
        {"day_of_week", "the day of the week of the match favours scoring"},
        {"hour", "the kick-off hour of the match favours scoring"},
        {"importance", "the importance of the competition pushes the team to score more"},
        {"travel_distance_home", "the travel distance of the home team to the venue favours scoring"},
        {"travel_distance_away", "the travel distance of the away team to the venue favours scoring"},
        {"n_clubs_home", "the number of clubs the home players come from favours scoring"},
        {"n_clubs_away", "the number of clubs the away players come from favours scoring"},
        {"attack_home", "the attack strength of the home team favours scoring"},
        {"attack_away", "the attack strength of the away team favours scoring"},
        {"defense_home", "the defense strength of the home team favours scoring"},
        {"defense_away", "the defense strength of the away team favours scoring"},
    }};
    return g;
  }
};

/// Renders the `{feat}` text: one bullet per covariate.
inline std::string render_feature_descriptions(const CovariateGlossary& g = CovariateGlossary::defaults()) {
  std::string out;
  for (std::size_t i = 0; i < g.items.size(); ++i) {
    if (i) out += '\n';
    out += "- " + g.items[i].first + ": a positive attribution means " + g.items[i].second + ".";
  }
  return out;
}

inline std::string format_fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// Renders the `{explain}` text: one "label: value" line per entry, in report
/// order. Empty lineup slots are left out.
inline std::string render_explain_section(const AttributionReport& r) {
  std::string out;
  for (const auto& e : r.entries) {
    if (e.empty_slot) continue;
    if (!out.empty()) out += '\n';
    out += e.label() + ": " + format_fixed4(e.attribution);
  }
  return out;
}

/// Renders the `{info}` text from the match and its rounded prediction.
inline std::string render_match_info(const RawMatch& m, const ScorePrediction& p) {
  char when[32];
  std::snprintf(when, sizeof when, "%04d-%02d-%02d %02d:%02d", m.date_time.year, m.date_time.month,
                m.date_time.day, m.date_time.hour, m.date_time.minute);
  return "Match: " + m.home_team + " (home) vs " + m.away_team + " (away)\n" +
         "Competition: " + m.competition + "\n" + "Date/time: " + when + "\n" +
         "Predicted score: " + m.home_team + " " + std::to_string(p.home) + " - " +
         std::to_string(p.away) + " " + m.away_team;
}

// ---------------------------------------------------------------------------
// Completion client

struct CompletionConfig {
  std::string endpoint;  // full URL, e.g. http://host:8000/v1/completions
  std::string model = "mistral-7b-instruct";
  int max_tokens = 1024;
  double temperature = 0.2;
  double timeout_seconds = 120.0;
  std::string token;
  int max_in_flight = 4;

  /// Reads `ORACLE_LLM_URL` and `ORACLE_LLM_TOKEN`.
  static CompletionConfig from_env() {
    CompletionConfig c;
    if (const char* u = std::getenv("ORACLE_LLM_URL")) c.endpoint = u;
    if (const char* t = std::getenv("ORACLE_LLM_TOKEN")) c.token = t;
    return c;
  }

  void validate() const {
    if (endpoint.empty()) throw ConfigError("completion endpoint URL is not configured (ORACLE_LLM_URL)");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (!(timeout_seconds > 0.0)) throw ConfigError("timeout must be positive");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  }
};

namespace detail {

/// Accepts the completions shape (`choices[0].text`) and the chat shape
/// (`choices[0].message.content`).
inline std::string completion_text(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw ServiceError("completion endpoint returned malformed JSON");
  }
  try {
    const auto& choice = j.at("choices").at(0);
    std::string text;
    if (choice.contains("text") && choice["text"].is_string()) text = choice["text"].get<std::string>();
    else text = choice.at("message").at("content").get<std::string>();
    if (text.empty()) throw ServiceError("completion endpoint returned an empty completion");
    return text;
  } catch (const json::exception&) {
    throw ServiceError("completion response lacks choices[0].text or choices[0].message.content");
  }
}

}  // namespace detail

/// Completion client limiting the number of concurrent requests.
class CompletionClient {
 public:
  explicit CompletionClient(CompletionConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))), slots_(cfg_.max_in_flight) {}

  const CompletionConfig& config() const { return cfg_; }

  /// POSTs `{model, prompt, max_tokens, temperature}`; retries once on a
  /// transient failure (connection error, timeout, HTTP 429 or 5xx).
  std::string complete(const std::string& prompt) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    const json body{{"model", cfg_.model},
                    {"prompt", prompt},
                    {"max_tokens", cfg_.max_tokens},
                    {"temperature", cfg_.temperature}};
    const std::string payload = body.dump();
    for (int attempt = 0;; ++attempt) {
      try {
        return attempt_once(payload);
      } catch (const Transient& t) {
        if (attempt >= 1) {
          if (t.timeout) throw TimeoutError(t.what(), t.status);
          throw ServiceError(t.what(), t.status);
        }
      }
    }
  }

 private:
  struct Transient : std::runtime_error {
    Transient(const std::string& w, int s, bool to) : std::runtime_error(w), status(s), timeout(to) {}
    int status;
    bool timeout;
  };

  std::string attempt_once(const std::string& payload) const {
    const auto url = detail::split_url(cfg_.endpoint);
    httplib::Client client(url.origin);
    const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(url.path.empty() ? "/" : url.path, headers, payload, "application/json");
    if (!res) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const bool timeout = res.error() == httplib::Error::ConnectionTimeout ||
                           (res.error() == httplib::Error::Read && elapsed >= 0.9 * cfg_.timeout_seconds);
      throw Transient(timeout ? "completion request timed out after " +
                                    std::to_string(cfg_.timeout_seconds) + " s"
                              : "completion request failed: " + httplib::to_string(res.error()),
                      0, timeout);
    }
    if (res->status == 429 || res->status >= 500)
      throw Transient("completion endpoint returned HTTP " + std::to_string(res->status) + ": " +
                          res->body.substr(0, 200),
                      res->status, false);
    if (res->status < 200 || res->status >= 300)
      throw ServiceError("completion endpoint returned HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200),
                         res->status);
    return detail::completion_text(res->body);
  }

  CompletionConfig cfg_;
  std::counting_semaphore<> slots_;
};

inline std::string generate_report(const std::string& prompt, const CompletionConfig& cfg) {
  CompletionClient client(cfg);
  return client.complete(prompt);
}

}  // namespace hbo
