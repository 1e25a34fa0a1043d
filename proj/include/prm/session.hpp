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

// Session recording, replay and the causality audit.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prm/bus.hpp"

namespace prm::session {

struct RecordingHeader {
  std::string task_name;
  std::uint64_t config_digest = 0;
  std::string start_time;  // wall clock, ISO-8601

  bool operator==(const RecordingHeader&) const = default;
};

struct RecordedEntry {
  bus::MessageEnvelope envelope;
  std::string recv_time;  // wall clock, ISO-8601

  bool operator==(const RecordedEntry&) const = default;
};

struct Recording {
  /// Absent only for an empty file.
  std::optional<RecordingHeader> header;
  /// Ordered by (topic, seq).
  std::vector<RecordedEntry> entries;

  /// Envelopes of one topic in seq order.
  std::vector<bus::MessageEnvelope> topic(std::string_view name) const;
};

/// A line of a recording file could not be parsed.
class RecordingError : public Error {
 public:
  RecordingError(int line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  /// 1-based.
  int line() const { return line_; }

 private:
  int line_;
};

/// Records every envelope published on `topics` after construction.
class SessionRecorder {
 public:
  SessionRecorder(bus::Endpoint& bus, const std::vector<bus::TopicName>& topics);

  Recording snapshot(RecordingHeader header) const;
  std::size_t size() const;
  void stop();

 private:
  struct Shared {
    mutable std::mutex mu;
    std::vector<RecordedEntry> entries;
    std::map<std::string, std::optional<std::uint64_t>> skip_up_to;
  };
  std::shared_ptr<Shared> shared_;
  std::vector<bus::Subscription> subs_;
};

/// Header line, then one entry per line. Throws IoError.
void write_recording(const std::filesystem::path& path, const Recording& recording);

/// Throws IoError when unreadable and RecordingError naming the bad line.
Recording read_recording(const std::filesystem::path& path);
Recording parse_recording(std::string_view text);

struct ReplayOptions {
  /// Topics to republish; empty means all recorded topics.
  std::vector<std::string> topics;
};

/// Republishes onto `bus` in original publish order, keeping seqs. Returns
/// the number of envelopes published.
std::size_t replay(const Recording& recording, bus::LocalBus& bus, ReplayOptions options = {});

struct AuditResult {
  std::size_t descriptions = 0;
  std::size_t consultations = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Every consultation must follow a description of the same frame index,
/// and no frame index may be answered twice.
AuditResult audit_causality(const Recording& recording);

}  // namespace prm::session
