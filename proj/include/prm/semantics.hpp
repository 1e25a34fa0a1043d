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

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prm/common.hpp"
#include "prm/config.hpp"
#include "prm/messages.hpp"

namespace prm::semantics {

enum class BackendId { llava, minigpt4, sam, mock };

std::string_view to_string(BackendId id);
BackendId backend_id_for(config::DescriptionMethod method);

inline constexpr std::string_view kDefaultEndpoint = "http://127.0.0.1:8000";
inline constexpr std::string_view kBackendUrlEnv = "ROSGPT_BACKEND_URL";

/// Mock lookup table. Entries are tried in order; an entry matches when its
/// label equals the frame label and, if it names a prompt, the prompt equals
/// the vision prompt. Unmatched frames get `fallback`.
class MockScript {
 public:
  struct Entry {
    std::string label;
    std::optional<std::string> prompt;
    std::string text;
  };

  MockScript() = default;
  MockScript(std::vector<Entry> entries, std::string fallback);

  /// JSON: {"default": "...", "entries": [{"label", "prompt"?, "text"}]}.
  /// Throws Error on malformed input.
  static MockScript from_json(std::string_view text);
  static MockScript load(const std::filesystem::path& path);

  const std::string& lookup(const std::optional<std::string>& label,
                            std::string_view prompt) const;
  const std::string& fallback() const { return fallback_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
  std::string fallback_;
};

struct BackendParams {
  std::optional<double> temperature;
  std::optional<std::string> llama_version;
  std::optional<std::string> configuration;
  std::optional<std::string> weights;
  std::optional<std::string> mock_script_path;

  bool operator==(const BackendParams&) const = default;
};

struct BackendSpec {
  BackendId id = BackendId::mock;
  std::optional<std::string> endpoint;
  BackendParams params;
  std::chrono::milliseconds timeout{30000};
  int retries = 1;
  /// Loaded table for the mock backend.
  std::shared_ptr<const MockScript> script;
};

struct DescribeRequest {
  BackendId backend = BackendId::mock;
  std::string vision_prompt;
  std::string image;
  PixelFormat format = PixelFormat::rgb8;
  double temperature = 0.0;
};

struct DescribeResponse {
  std::string text;
  std::chrono::nanoseconds latency{0};
  std::string model_tag;
};

struct MaskInfo {
  double area_fraction = 0.0;
  std::optional<std::string> label;
};

struct MaskSummary {
  std::vector<MaskInfo> masks;
  std::size_t mask_count() const { return masks.size(); }
};

/// "N regions detected; largest covers P% of frame", P rounded to an integer.
std::string render_mask_summary(const MaskSummary& summary);

/// Image-semantics backend. Implementations are reentrant.
class Backend {
 public:
  virtual ~Backend() = default;
  /// Throws BackendTimeout, BackendProtocolError or BackendUnavailable.
  virtual DescribeResponse describe(const Frame& frame, std::string_view vision_prompt) = 0;
  virtual BackendId id() const = 0;
};

class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::shared_ptr<const MockScript> script);
  DescribeResponse describe(const Frame& frame, std::string_view vision_prompt) override;
  BackendId id() const override { return BackendId::mock; }

 private:
  std::shared_ptr<const MockScript> script_;
};

/// HTTP client for LLaVA- and MiniGPT-4-style services:
/// POST {endpoint}/describe {prompt, image_b64, image_format, temperature, model}
/// and the response body {text}.
class HttpDescribeBackend final : public Backend {
 public:
  explicit HttpDescribeBackend(BackendSpec spec);
  DescribeResponse describe(const Frame& frame, std::string_view vision_prompt) override;
  BackendId id() const override { return spec_.id; }

  DescribeRequest make_request(const Frame& frame, std::string_view vision_prompt) const;
  std::string model_tag() const;

 private:
  BackendSpec spec_;
};

/// SAM-style segmentation client: POST {endpoint}/segment returning
/// {masks: [{area_fraction, bbox, label?}]}. As a description producer the
/// mask summary is rendered to one sentence.
class SamBackend final : public Backend {
 public:
  explicit SamBackend(BackendSpec spec);
  DescribeResponse describe(const Frame& frame, std::string_view vision_prompt) override;
  BackendId id() const override { return BackendId::sam; }

  MaskSummary segment(const Frame& frame, std::string_view prompt);

 private:
  BackendSpec spec_;
};

/// Dispatches to the backend implementation for `spec`.
DescribeResponse describe(const BackendSpec& spec, const Frame& frame,
                          std::string_view vision_prompt);
/// Throws std::invalid_argument unless spec.id is sam.
MaskSummary segment(const BackendSpec& spec, const Frame& frame, std::string_view prompt);

using BackendFactory = std::function<std::unique_ptr<Backend>(const BackendSpec&)>;

/// Maps every BackendId to a factory.
class BackendRegistry {
 public:
  /// Registry with the built-in implementations.
  static BackendRegistry with_builtins();

  void add(BackendId id, BackendFactory factory);
  std::unique_ptr<Backend> create(const BackendSpec& spec) const;
  /// Ids accepted by the config schema that lack a factory.
  std::vector<BackendId> missing() const;

 private:
  std::map<BackendId, BackendFactory> factories_;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

/// Builds the spec from the parameter block matching the configured method.
/// `endpoint_override` wins over the ROSGPT_BACKEND_URL environment variable,
/// which wins over kDefaultEndpoint. Mock scripts are loaded relative to
/// `base_dir`. Throws config::ConfigError for a missing block.
BackendSpec build_backend(const config::TaskConfig& config,
                          std::optional<std::string> endpoint_override = std::nullopt,
                          const std::filesystem::path& base_dir = {});

}  // namespace prm::semantics
