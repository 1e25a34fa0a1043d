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

// Command implementations behind the prm_vision executable.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "prm/camera.hpp"
#include "prm/consultation.hpp"

namespace prm::app {

enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitIo = 2 };

/// Raised for bad flag combinations; maps to kExitIo.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunOptions {
  std::filesystem::path config_path;
  /// Replaces Image_Description_Method, e.g. "mock".
  std::optional<std::string> backend_method;
  std::optional<std::string> backend_url;
  std::optional<std::filesystem::path> mock_script;
  std::optional<int> backend_retries;
  std::optional<std::chrono::milliseconds> backend_timeout;

  std::optional<std::filesystem::path> llm_stub;
  std::optional<std::string> llm_endpoint;
  std::optional<std::string> api_key;

  /// Replaces the configured input with a frame directory.
  std::optional<std::filesystem::path> frames_dir;
  std::optional<std::uint64_t> frame_budget;
  std::optional<std::uint32_t> frame_interval;
  std::optional<double> sample_seconds;
  std::optional<consultation::BacklogPolicy> backlog;
  std::chrono::milliseconds drain_timeout{5000};

  std::optional<std::filesystem::path> session_log;
  std::optional<std::filesystem::path> annotate_dir;
  std::optional<std::filesystem::path> consultations_jsonl;
  std::optional<std::filesystem::path> record;
  bool echo_consultations = false;

  std::optional<std::string> bus_listen;
  std::optional<std::string> bus_connect;
  std::chrono::milliseconds connect_timeout{10000};

  const std::atomic<bool>* stop = nullptr;
};

struct PipelineResult {
  std::optional<camera::CameraReport> camera;
  std::optional<consultation::ConsultationReport> consultation;
};

/// Loads the task, applies overrides and runs the nodes this process hosts:
/// both by default, the consultation node with --bus-listen, the camera
/// node with --bus-connect. Throws on setup failures.
PipelineResult run_pipeline(const RunOptions& options, std::ostream& out);

std::string format_report(const camera::CameraReport& report);
std::string format_report(const consultation::ConsultationReport& report);

int cmd_validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct ReplayOptions {
  std::filesystem::path recording;
  /// With both set, the consultation node is re-run on the recorded
  /// descriptions and its output compared to the recorded consultations.
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> llm_stub;
  std::chrono::milliseconds settle_timeout{5000};
};

int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err);

struct PromptlabOptions {
  std::filesystem::path cases;
  std::filesystem::path rubric;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> records;
  std::optional<std::string> backend_method;
  std::optional<std::string> backend_url;
  std::optional<std::filesystem::path> mock_script;
  std::optional<std::filesystem::path> llm_stub;
  std::optional<std::string> llm_endpoint;
  std::optional<std::string> api_key;
  unsigned parallelism = 4;
};

int cmd_promptlab(const PromptlabOptions& options, std::ostream& out, std::ostream& err);

struct TapOptions {
  std::string bus_connect;
  std::string topic;
  std::optional<std::uint64_t> count;
  std::chrono::milliseconds timeout{10000};
};

/// Prints "ready", then one JSON envelope per line.
int cmd_tap(const TapOptions& options, std::ostream& out, std::ostream& err);

}  // namespace prm::app
