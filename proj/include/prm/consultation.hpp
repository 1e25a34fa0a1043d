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

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "prm/bus.hpp"
#include "prm/config.hpp"
#include "prm/messages.hpp"

namespace prm::consultation {

/// The description was empty; no request is issued.
class SkipSignal : public Error {
 public:
  using Error::Error;
};

class CredentialError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Rate limited on every attempt.
class RetryableError : public BackendError {
 public:
  using BackendError::BackendError;
};

inline constexpr std::string_view kApiKeyEnv = "ROSGPT_API_KEY";

struct LlmRequest {
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  /// Name of the credential, never the secret itself.
  std::string api_key_ref;

  bool operator==(const LlmRequest&) const = default;
};

/// system = llm_prompt, user = description text, both verbatim. Throws
/// SkipSignal for an empty description and std::invalid_argument for an
/// empty prompt or a temperature outside [0, 2].
LlmRequest build_llm_request(std::string_view llm_prompt, const ImageDescription& description,
                             double temperature, std::string api_key_ref = std::string(kApiKeyEnv));

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// The first text completion. Throws BackendError subclasses.
  virtual std::string complete(const LlmRequest& request) = 0;
  virtual std::string model_tag() const = 0;
};

std::string ask_llm(LlmClient& client, const LlmRequest& request);

/// POST {endpoint}/chat {system, user, temperature} -> {text}, with a bearer
/// token. 401/403 raise CredentialError at once. 429, 5xx, timeouts and
/// refused connections are retried with exponential backoff.
class HttpLlmClient final : public LlmClient {
 public:
  struct Options {
    std::string endpoint;
    std::string api_key;
    std::string model_tag = "gpt-3.5-turbo";
    std::chrono::milliseconds timeout{30000};
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
  };

  explicit HttpLlmClient(Options options);
  std::string complete(const LlmRequest& request) override;
  std::string model_tag() const override { return options_.model_tag; }

 private:
  Options options_;
};

/// Offline client answering from a keyed script. Every request is captured.
class StubLlmClient final : public LlmClient {
 public:
  struct Entry {
    std::optional<std::string> system;
    std::optional<std::string> user;
    std::optional<std::string> user_contains;
    std::string text;
  };

  StubLlmClient(std::vector<Entry> entries, std::string fallback);
  StubLlmClient(StubLlmClient&& other) noexcept;

  /// JSON: {"default": "...", "entries": [{"system"?, "user"?,
  /// "user_contains"?, "text"}]}. Throws Error.
  static StubLlmClient from_json(std::string_view text);
  static StubLlmClient load(const std::filesystem::path& path);

  std::string complete(const LlmRequest& request) override;
  std::string model_tag() const override { return "stub"; }

  std::vector<LlmRequest> captured() const;

 private:
  std::vector<Entry> entries_;
  std::string fallback_;
  mutable std::mutex mu_;
  std::vector<LlmRequest> captured_;
};

/// Receives each published consultation, e.g. for notification.
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void deliver(const Consultation& consultation) = 0;
};

class ConsoleSink final : public Sink {
 public:
  explicit ConsoleSink(std::ostream& out) : out_(out) {}
  void deliver(const Consultation& consultation) override;

 private:
  std::ostream& out_;
  std::mutex mu_;
};

class JsonlSink final : public Sink {
 public:
  /// Throws IoError.
  explicit JsonlSink(const std::filesystem::path& path);
  void deliver(const Consultation& consultation) override;

 private:
  std::ofstream out_;
  std::mutex mu_;
};

enum class BacklogPolicy {
  /// Only the newest pending description is answered; older ones are dropped.
  latest_only,
  /// Every description is answered in arrival order.
  fifo,
};

struct ConsultationOptions {
  BacklogPolicy backlog = BacklogPolicy::latest_only;
  std::vector<Sink*> sinks;
  const std::atomic<bool>* stop = nullptr;
};

struct ConsultationReport {
  std::uint64_t descriptions_seen = 0;
  std::uint64_t consultations_published = 0;
  std::uint64_t errors = 0;
  std::uint64_t skipped_empty = 0;
  std::uint64_t dropped_backlog = 0;
  std::uint64_t duplicates = 0;
  std::vector<std::uint64_t> published_indices;
};

/// Consumes Image_Description and publishes on GPT_Consultation. Subscribes
/// on construction so nothing published after that point is missed.
class ConsultationNode {
 public:
  ConsultationNode(config::TaskConfig config, LlmClient& client, bus::Endpoint& bus,
                   ConsultationOptions options = {});

  /// Runs until the stop flag is set or the subscription ends.
  ConsultationReport run();

 private:
  bool handle(const bus::MessageEnvelope& envelope, ConsultationReport& report);

  config::TaskConfig config_;
  LlmClient& client_;
  bus::Endpoint& bus_;
  ConsultationOptions options_;
  bus::TopicHandle consultation_topic_;
  bus::Subscription descriptions_;
  std::optional<std::uint64_t> last_index_;
};

ConsultationReport run_consultation_node(const config::TaskConfig& config, LlmClient& client,
                                         bus::Endpoint& bus, ConsultationOptions options = {});

}  // namespace prm::consultation
