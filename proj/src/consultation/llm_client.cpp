// Copyright 2026 The prm-vision Authors
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

#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prm/consultation.hpp"
#include "prm/http.hpp"

namespace prm::consultation {

using nlohmann::json;

LlmRequest build_llm_request(std::string_view llm_prompt, const ImageDescription& description,
                             double temperature, std::string api_key_ref) {
  if (description.text.empty()) {
    throw SkipSignal("empty description for frame " + std::to_string(description.frame_index));
  }
  if (llm_prompt.empty()) throw std::invalid_argument("llm prompt must not be empty");
  if (!(temperature >= config::kMinTemperature && temperature <= config::kMaxTemperature)) {
    throw std::invalid_argument("temperature outside [0, 2]");
  }
  return LlmRequest{std::string(llm_prompt), description.text, temperature,
                    std::move(api_key_ref)};
}

std::string ask_llm(LlmClient& client, const LlmRequest& request) {
  return client.complete(request);
}

HttpLlmClient::HttpLlmClient(Options options) : options_(std::move(options)) {
  http::parse_url(options_.endpoint);
  if (options_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

std::string HttpLlmClient::complete(const LlmRequest& request) {
  if (options_.api_key.empty()) {
    throw CredentialError("no API key; set " + request.api_key_ref);
  }
  const auto url = http::parse_url(options_.endpoint);
  const auto body =
      json{{"system", request.system_text}, {"user", request.user_text},
           {"temperature", request.temperature}}
          .dump();
  const std::map<std::string, std::string> headers{
      {"Authorization", "Bearer " + options_.api_key}};

  enum class Last { none, rate_limited, server, timeout, unavailable } last = Last::none;
  std::string message;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      spdlog::debug("llm retry {} after {} ms: {}", attempt, backoff.count(), message);
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    http::Response response;
    try {
      response = http::post_json(url, "/chat", body, options_.timeout, headers);
    } catch (const BackendTimeout& e) {
      last = Last::timeout;
      message = e.what();
      continue;
    } catch (const BackendUnavailable& e) {
      last = Last::unavailable;
      message = e.what();
      continue;
    }
    if (response.status == 401 || response.status == 403) {
      throw CredentialError("LLM endpoint rejected the credential (HTTP " +
                            std::to_string(response.status) + ")");
    }
    if (response.status == 429) {
      last = Last::rate_limited;
      message = "rate limited (HTTP 429)";
      continue;
    }
    if (response.status >= 500) {
      last = Last::server;
      message = "LLM endpoint returned HTTP " + std::to_string(response.status);
      continue;
    }
    if (response.status < 200 || response.status >= 300) {
      throw BackendProtocolError("LLM endpoint returned HTTP " + std::to_string(response.status));
    }
    const auto reply = json::parse(response.body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("text") ||
        !reply["text"].is_string() || reply["text"].get_ref<const std::string&>().empty()) {
      throw BackendProtocolError("LLM response lacks a non-empty text field");
    }
    return reply["text"].get<std::string>();
  }
  switch (last) {
    case Last::rate_limited: throw RetryableError(message + " after " +
                                                  std::to_string(options_.max_attempts) + " tries");
    case Last::timeout: throw BackendTimeout(message);
    case Last::server: throw BackendProtocolError(message);
    case Last::unavailable:
    case Last::none: break;
  }
  throw BackendUnavailable(message);
}

StubLlmClient::StubLlmClient(std::vector<Entry> entries, std::string fallback)
    : entries_(std::move(entries)), fallback_(std::move(fallback)) {
  if (fallback_.empty()) throw Error("llm stub: default text must not be empty");
  for (const auto& e : entries_) {
    if (e.text.empty()) throw Error("llm stub: entry with empty text");
  }
}

StubLlmClient::StubLlmClient(StubLlmClient&& other) noexcept
    : entries_(std::move(other.entries_)),
      fallback_(std::move(other.fallback_)),
      captured_(std::move(other.captured_)) {}

StubLlmClient StubLlmClient::from_json(std::string_view text) {
  const auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("llm stub: not a JSON object");
  auto opt = [](const json& e, const char* key) -> std::optional<std::string> {
    auto it = e.find(key);
    if (it == e.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
  };
  try {
    std::vector<Entry> entries;
    if (auto it = j.find("entries"); it != j.end()) {
      for (const auto& e : *it) {
        entries.push_back(Entry{opt(e, "system"), opt(e, "user"), opt(e, "user_contains"),
                                e.at("text").get<std::string>()});
      }
    }
    return StubLlmClient(std::move(entries), j.at("default").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(std::string("llm stub: ") + e.what());
  }
}

StubLlmClient StubLlmClient::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read llm stub " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string StubLlmClient::complete(const LlmRequest& request) {
  {
    std::lock_guard lock(mu_);
    captured_.push_back(request);
  }
  for (const auto& e : entries_) {
    if (e.system && *e.system != request.system_text) continue;
    if (e.user && *e.user != request.user_text) continue;
    if (e.user_contains && request.user_text.find(*e.user_contains) == std::string::npos) continue;
    return e.text;
  }
  return fallback_;
}

std::vector<LlmRequest> StubLlmClient::captured() const {
  std::lock_guard lock(mu_);
  return captured_;
}

}  // namespace prm::consultation
