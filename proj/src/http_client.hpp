#pragma once

// Minimal JSON-over-HTTP POST shared by the remote providers.

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "qeloop/error.hpp"

namespace qeloop::detail {

struct PostTarget {
  std::string url;
  std::string api_key_env;  // empty: no Authorization header
  int timeout_seconds = 30;
  int retries = 0;
};

// Returns the parsed response body. Transport errors, non-200 statuses and
// non-JSON bodies raise ProviderUnavailable after the configured retries.
inline nlohmann::json post_json(const PostTarget& target, const nlohmann::json& body,
                                const std::string& provider_id) {
  const auto scheme = target.url.find("://");
  const auto from = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = target.url.find('/', from);
  const std::string base = slash == std::string::npos ? target.url : target.url.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : target.url.substr(slash);

  httplib::Client client(base);
  client.set_connection_timeout(target.timeout_seconds);
  client.set_read_timeout(target.timeout_seconds);
  httplib::Headers headers;
  if (!target.api_key_env.empty()) {
    if (const char* key = std::getenv(target.api_key_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= target.retries; ++attempt) {
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("response is not JSON: ") + e.what();
    }
  }
  throw Error(Errc::ProviderUnavailable, provider_id, last_error);
}

}  // namespace qeloop::detail
