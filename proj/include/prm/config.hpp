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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prm/common.hpp"

namespace prm::config {

/// `mock` is an extension for offline runs; the others name real VLM services.
enum class DescriptionMethod { llava, minigpt4, sam, mock };
/// `frames` (a directory of images) is an extension next to webcam and video.
enum class InputKind { webcam, video, frames };
enum class LlamaVersion { v7b, v13b };

std::string_view to_string(DescriptionMethod method);
std::string_view to_string(InputKind kind);
std::string_view to_string(LlamaVersion version);

std::optional<DescriptionMethod> parse_description_method(std::string_view text);
std::optional<InputKind> parse_input_kind(std::string_view text);
std::optional<LlamaVersion> parse_llama_version(std::string_view text);

struct CameraConfig {
  DescriptionMethod method = DescriptionMethod::llava;
  std::string vision_prompt;
  InputKind choose_input = InputKind::webcam;
  std::optional<std::string> input_video;
  std::optional<std::string> output_video;

  bool operator==(const CameraConfig&) const = default;
};

struct ConsultationConfig {
  std::string llm_prompt;
  double gpt_temperature = 0.0;

  bool operator==(const ConsultationConfig&) const = default;
};

struct MiniGpt4Params {
  std::optional<std::string> configuration;
  std::optional<double> temperature;

  bool operator==(const MiniGpt4Params&) const = default;
};

struct LlavaParams {
  std::optional<double> temperature;
  std::optional<LlamaVersion> llama_version;

  bool operator==(const LlavaParams&) const = default;
};

struct SamParams {
  std::optional<std::string> weights;

  bool operator==(const SamParams&) const = default;
};

struct MockParams {
  std::optional<std::string> script;

  bool operator==(const MockParams&) const = default;
};

/// One YAML task file. A parameter block that is absent or empty in the file
/// is represented as nullopt.
struct TaskConfig {
  std::string task_name;
  CameraConfig camera;
  ConsultationConfig consultation;
  std::optional<MiniGpt4Params> minigpt4;
  std::optional<LlavaParams> llava;
  std::optional<SamParams> sam;
  std::optional<MockParams> mock;

  bool operator==(const TaskConfig&) const = default;
};

// YAML keys, byte-identical to the published task-file layout.
namespace keys {
inline constexpr std::string_view kTaskName = "Task_name";
inline constexpr std::string_view kCameraNode = "ROSGPT_Vision_Camera_Node";
inline constexpr std::string_view kMethod = "Image_Description_Method";
inline constexpr std::string_view kVisionPrompt = "Vision_prompt";
inline constexpr std::string_view kChooseInput = "Choose_input";
inline constexpr std::string_view kInputVideo = "Input_video";
inline constexpr std::string_view kOutputVideo = "Output_video";
inline constexpr std::string_view kConsultationNode = "GPT_Consultation_Node";
inline constexpr std::string_view kLlmPrompt = "llm_prompt";
inline constexpr std::string_view kGptTemperature = "GPT_temperature";
inline constexpr std::string_view kMiniGpt4 = "MiniGPT4_parameters";
inline constexpr std::string_view kMiniGpt4Configuration = "configuration";
inline constexpr std::string_view kMiniGpt4Temperature = "temperature_miniGPT4";
inline constexpr std::string_view kLlava = "llava_parameters";
inline constexpr std::string_view kLlavaTemperature = "temperature_llavA";
inline constexpr std::string_view kLlamaVersion = "llama_version";
inline constexpr std::string_view kSam = "SAM_parameters";
inline constexpr std::string_view kSamWeights = "weights_SAM";
// Extension block for the scripted mock backend.
inline constexpr std::string_view kMock = "mock_parameters";
inline constexpr std::string_view kMockScript = "script";
}  // namespace keys

class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(message), path_(std::move(path)) {}
  /// Dotted key path, e.g. "ROSGPT_Vision_Camera_Node.Vision_prompt".
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class SyntaxError : public ConfigError {
 public:
  SyntaxError(int line, const std::string& message)
      : ConfigError("", "line " + std::to_string(line) + ": " + message), line_(line) {}
  /// 1-based.
  int line() const { return line_; }

 private:
  int line_;
};

class MissingField : public ConfigError {
 public:
  explicit MissingField(std::string path)
      : ConfigError(path, "missing required field " + path) {}
};

class TypeError : public ConfigError {
 public:
  TypeError(std::string path, const std::string& detail)
      : ConfigError(path, "wrong type for " + path + ": " + detail) {}
};

struct ParseResult {
  TaskConfig config;
  /// Dotted paths of keys the schema does not know.
  std::vector<std::string> warnings;
};

ParseResult parse_task_config(std::string_view text);
/// Throws IoError when the file cannot be read.
ParseResult load_task_config(const std::filesystem::path& path);

struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Cross-field checks: method and parameter block, input kind and input
/// path, temperature ranges, non-empty prompts. Empty means valid.
std::vector<Violation> validate(const TaskConfig& config);

/// YAML text using the schema's key names; parse(serialize(c)) == c.
std::string serialize(const TaskConfig& config);

/// FNV-1a over the serialized form.
std::uint64_t digest(const TaskConfig& config);

inline constexpr double kMinTemperature = 0.0;
inline constexpr double kMaxTemperature = 2.0;

}  // namespace prm::config
