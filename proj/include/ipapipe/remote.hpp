// Copyright 2026 The ipa-pipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP clients for the two remote surfaces:
//
//   rewrite     POST {"system": s, "user": u}  ->  {"text": t}
//   transcribe  POST {"framed": f}             ->  {"ipa": i}
//
// plus an adapter that speaks the chat-completions shape for the rewrite
// step. Kept apart from the core headers so that only code that talks to
// the network pulls in cpp-httplib.

#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "ipapipe/error.hpp"
#include "ipapipe/rewrite.hpp"
#include "ipapipe/transcribe.hpp"

namespace ipapipe::remote {

inline constexpr const char* kApiKeyEnv = "IPA_PIPE_API_KEY";

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

inline Endpoint parse_endpoint(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw Error("endpoint URL lacks a scheme: '" + std::string(url) + "'");
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error("unsupported endpoint scheme '" + std::string(scheme) + "'");
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  if (path_start == std::string_view::npos) {
    ep.origin = std::string(url);
    ep.path = "/";
  } else {
    ep.origin = std::string(url.substr(0, path_start));
    ep.path = std::string(url.substr(path_start));
  }
  if (ep.origin.size() == scheme_end + 3) throw Error("endpoint URL lacks a host: '" + std::string(url) + "'");
  return ep;
}

inline std::optional<std::string> api_key_from_env() {
  if (const char* v = std::getenv(kApiKeyEnv); v && *v) return std::string(v);
  return std::nullopt;
}

/// POSTs a JSON body and parses a JSON reply. One connection per call, so
/// instances can be shared across threads.
class JsonPoster {
 public:
  JsonPoster(std::string url, std::optional<std::string> bearer, std::chrono::seconds timeout = std::chrono::seconds(60))
      : url_(std::move(url)), endpoint_(parse_endpoint(url_)), bearer_(std::move(bearer)), timeout_(timeout) {}

  nlohmann::json post(const nlohmann::json& body) const {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (bearer_) headers.emplace("Authorization", "Bearer " + *bearer_);
    auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) throw Error("POST " + url_ + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw Error("POST " + url_ + " returned HTTP " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error("POST " + url_ + " returned malformed JSON: " + e.what());
    }
  }

  const std::string& url() const noexcept { return url_; }

 private:
  std::string url_;
  Endpoint endpoint_;
  std::optional<std::string> bearer_;
  std::chrono::seconds timeout_;
};

inline std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string())
    throw Error(std::string("remote response lacks string field '") + key + "'");
  return j.at(key).get<std::string>();
}

/// Native rewrite protocol.
class HttpCompletionClient final : public rewrite::CompletionClient {
 public:
  HttpCompletionClient(std::string url, std::optional<std::string> api_key)
      : api_key_(std::move(api_key)), poster_(std::move(url), api_key_) {}

  std::string complete(const std::string& system, const std::string& user) override {
    if (!api_key_) throw Error(std::string("credential missing: set ") + kApiKeyEnv);
    return require_string(poster_.post({{"system", system}, {"user", user}}), "text");
  }

 private:
  std::optional<std::string> api_key_;
  JsonPoster poster_;
};

/// Chat-completions providers: system/user messages in, first choice out.
class ChatCompletionsClient final : public rewrite::CompletionClient {
 public:
  ChatCompletionsClient(std::string url, std::optional<std::string> api_key, std::string model)
      : api_key_(std::move(api_key)), poster_(std::move(url), api_key_), model_(std::move(model)) {}

  std::string complete(const std::string& system, const std::string& user) override {
    if (!api_key_) throw Error(std::string("credential missing: set ") + kApiKeyEnv);
    nlohmann::json body = {{"model", model_},
                           {"messages",
                            {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}}}};
    auto reply = poster_.post(body);
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error("chat-completions response lacks choices[0].message.content");
    }
  }

 private:
  std::optional<std::string> api_key_;
  JsonPoster poster_;
  std::string model_;
};

/// Model endpoint for subword transcription. Optional prefix/suffix markers
/// (start/end tokens some models echo) are stripped from the reply, then the
/// reply is re-framed so it honours the single-space contract.
class RemoteBackend final : public transcribe::TranscriptionBackend {
 public:
  RemoteBackend(std::string url, std::optional<std::string> api_key, std::string strip_prefix = {},
                std::string strip_suffix = {})
      : poster_(std::move(url), std::move(api_key)),
        strip_prefix_(std::move(strip_prefix)),
        strip_suffix_(std::move(strip_suffix)) {}

  std::string generate(const std::string& framed) const override {
    std::string ipa = require_string(poster_.post({{"framed", framed}}), "ipa");
    std::string_view view = utf8::trim(ipa);
    if (!strip_prefix_.empty() && view.starts_with(strip_prefix_)) view.remove_prefix(strip_prefix_.size());
    view = utf8::trim(view);
    if (!strip_suffix_.empty() && view.ends_with(strip_suffix_)) view.remove_suffix(strip_suffix_.size());
    std::string cleaned = transcribe::frame_or_empty(view);
    if (cleaned.empty()) throw Error("remote model returned an empty transcription");
    return cleaned;
  }

  std::string name() const override { return "remote(" + poster_.url() + ")"; }

 private:
  JsonPoster poster_;
  std::string strip_prefix_;
  std::string strip_suffix_;
};

}  // namespace ipapipe::remote
