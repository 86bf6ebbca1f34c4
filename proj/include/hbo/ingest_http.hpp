#pragma once

// HTTP-backed match source. Kept apart from ingest.hpp so that only callers
// needing the network pull in cpp-httplib.

#include <cstdlib>
#include <string>

#include "hbo/detail/http.hpp"

#include "hbo/ingest.hpp"

namespace hbo {

struct ApiConfig {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string token;
  double timeout_seconds = 30.0;

  /// Reads `ORACLE_API_URL` and `ORACLE_API_TOKEN`.
  static ApiConfig from_env() {
    ApiConfig c;
    if (const char* u = std::getenv("ORACLE_API_URL")) c.base_url = u;
    if (const char* t = std::getenv("ORACLE_API_TOKEN")) c.token = t;
    return c;
  }
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/', or is empty
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("URL lacks a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace detail

/// `GET {base}/matches?category=..&gender=..&from=..&to=..` returning a JSON
/// array of match objects. A fresh connection is opened per call, so one
/// instance may be shared across threads.
class HttpMatchSource final : public MatchSource {
 public:
  explicit HttpMatchSource(ApiConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("match API base URL is not configured");
  }

  std::vector<RawMatch> fetch(Category category, Gender gender, const DateTime& from,
                              const DateTime& to) const override {
    const auto url = detail::split_url(config_.base_url);
    httplib::Client client(url.origin);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    httplib::Headers headers;
    if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);
    httplib::Params params{{"category", to_string(category)},
                           {"gender", to_string(gender)},
                           {"from", from.to_string()},
                           {"to", to.to_string()}};
    auto res = client.Get(url.path + "/matches", params, headers);
    if (!res) throw ServiceError("match API request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw ServiceError("match API returned HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200),
                         res->status);
    json body;
    try {
      body = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw ServiceError("match API returned malformed JSON", res->status);
    }
    if (!body.is_array()) throw ServiceError("match API response is not a JSON array", res->status);
    std::vector<RawMatch> out;
    for (std::size_t i = 0; i < body.size(); ++i) out.push_back(match_from_json(body[i], i + 1));
    return out;
  }

 private:
  ApiConfig config_;
};

}  // namespace hbo
