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
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "prm/bus.hpp"
#include "prm/config.hpp"
#include "prm/messages.hpp"
#include "prm/semantics.hpp"

namespace prm::camera {

enum class SamplingMode { every_f_frames, every_t_seconds };

struct SamplingPolicy {
  SamplingMode mode = SamplingMode::every_f_frames;
  std::uint32_t f = 1;
  double t = 5.0;  // seconds

  static SamplingPolicy every_frames(std::uint32_t f);
  static SamplingPolicy every_seconds(double t);
};

/// Throws std::invalid_argument when f == 0 or t <= 0.
void check_policy(const SamplingPolicy& policy);

/// `counter` counts every frame read. For every_t_seconds, `now` and
/// `last_sample_time` are on the same clock.
bool should_sample(std::uint64_t counter, const SamplingPolicy& policy, Timestamp now,
                   std::optional<Timestamp> last_sample_time);

class SourceError : public Error {
 public:
  using Error::Error;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Frames in stream order; nothing once a finite source is exhausted.
  /// Throws SourceError.
  virtual std::optional<Frame> next_frame() = 0;
  virtual bool exhausted() const = 0;
  virtual config::InputKind kind() const = 0;
  virtual std::string location() const = 0;
};

/// Reads one png/jpg file, taking width and height from its header. Throws
/// SourceError when the file is unreadable, of another type or corrupt.
Frame read_image_file(const std::filesystem::path& path, std::uint64_t index = 0);

/// Image directory. Files with a png/jpg/jpeg extension, sorted by name,
/// define the stream; file k has index k. Optional `labels.tsv` maps file
/// names to labels. Frames keep their encoded bytes. Capture time is
/// index * period.
class DirectorySource final : public FrameSource {
 public:
  explicit DirectorySource(std::filesystem::path dir,
                           std::chrono::nanoseconds period = std::chrono::seconds(1));

  std::optional<Frame> next_frame() override;
  bool exhausted() const override { return exhausted_; }
  config::InputKind kind() const override { return config::InputKind::frames; }
  std::string location() const override { return dir_.string(); }

  std::size_t size() const { return files_.size(); }
  /// Files skipped as unreadable or corrupt so far.
  std::size_t skipped() const { return skipped_; }

 private:
  std::filesystem::path dir_;
  std::chrono::nanoseconds period_;
  std::vector<std::filesystem::path> files_;
  std::map<std::string, std::string> labels_;
  std::size_t next_ = 0;
  std::size_t skipped_ = 0;
  bool exhausted_ = false;
};

/// Generated rgb8 frames. With `count` set the source is finite and frames
/// carry stream time index * period. Without it the source is live: frames
/// appear every `period` of wall time and a reader that falls behind gets
/// the newest one, the skipped indices being consumed.
class SyntheticSource final : public FrameSource {
 public:
  struct Options {
    std::optional<std::uint64_t> count;
    std::uint32_t width = 64;
    std::uint32_t height = 48;
    std::chrono::nanoseconds period = std::chrono::seconds(1);
    /// Labels drawn uniformly per frame with `seed`; empty means unlabeled.
    std::vector<std::string> labels;
    std::uint64_t seed = 0;
  };

  explicit SyntheticSource(Options options);

  std::optional<Frame> next_frame() override;
  bool exhausted() const override { return exhausted_; }
  config::InputKind kind() const override {
    return options_.count ? config::InputKind::frames : config::InputKind::webcam;
  }
  std::string location() const override { return "synthetic"; }

 private:
  Frame make_frame(std::uint64_t index);

  Options options_;
  std::mt19937_64 rng_;
  std::uint64_t next_ = 0;
  std::chrono::steady_clock::time_point start_;
  bool exhausted_ = false;
};

/// Source for the camera section of a task file. `video` needs a codec and
/// is rejected with SourceError; `webcam` maps to a live synthetic source.
/// Relative paths resolve against `base_dir`.
std::unique_ptr<FrameSource> open_source(const config::CameraConfig& camera,
                                         const std::filesystem::path& base_dir = {});

struct SessionRecord {
  std::uint64_t frame_index = 0;
  Timestamp capture_time{0};
  std::string description;
  std::optional<Consultation> consultation;
  std::string backend_id;

  bool operator==(const SessionRecord&) const = default;
};

class LogError : public Error {
 public:
  using Error::Error;
};

/// One JSON object, no trailing newline.
std::string session_record_json(const SessionRecord& record);

/// JSONL, one line per record. Throws LogError.
void write_session_log(const std::filesystem::path& path,
                       const std::vector<SessionRecord>& records);

/// Inverse of write_session_log. Throws LogError.
std::vector<SessionRecord> read_session_log(const std::filesystem::path& path);

struct CameraOptions {
  SamplingPolicy policy;
  /// Stop after this many frames have been read.
  std::optional<std::uint64_t> frame_budget;
  const std::atomic<bool>* stop = nullptr;
  /// Subscribe to the consultation topic and attach replies to the log.
  bool listen_consultations = true;
  /// After the source ends, wait this long for outstanding consultations.
  std::chrono::milliseconds drain_timeout{5000};
  std::optional<std::filesystem::path> session_log;
  /// Per published frame: the frame bytes and a text file with the overlay.
  std::optional<std::filesystem::path> annotate_dir;
};

struct CameraReport {
  std::uint64_t frames_read = 0;
  std::uint64_t frames_sampled = 0;
  std::uint64_t descriptions_published = 0;
  std::uint64_t backend_errors = 0;
  std::uint64_t consultations_received = 0;
  std::vector<std::uint64_t> published_indices;
  /// Set when the source failed and the run ended early.
  std::optional<std::string> source_error;
  std::optional<std::string> log_error;
};

/// The camera node loop: read, sample, describe, publish. One describe call
/// at a time.
class CameraNode {
 public:
  CameraNode(config::TaskConfig config, semantics::Backend& backend, bus::Endpoint& bus,
             CameraOptions options = {});
  ~CameraNode();
  CameraNode(const CameraNode&) = delete;
  CameraNode& operator=(const CameraNode&) = delete;

  CameraReport run(FrameSource& source);

  /// Records of the last run, with consultations attached.
  std::vector<SessionRecord> records() const;

 private:
  struct State;
  config::TaskConfig config_;
  semantics::Backend& backend_;
  bus::Endpoint& bus_;
  CameraOptions options_;
  std::shared_ptr<State> state_;
};

CameraReport run_camera_node(const config::TaskConfig& config, FrameSource& source,
                             semantics::Backend& backend, bus::Endpoint& bus,
                             CameraOptions options = {});

}  // namespace prm::camera
