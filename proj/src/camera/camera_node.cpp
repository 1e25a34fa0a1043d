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

#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "prm/camera.hpp"

namespace prm::camera {

namespace fs = std::filesystem;

struct CameraNode::State {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<SessionRecord> records;
  std::map<std::uint64_t, Consultation> consultations;
  std::uint64_t received = 0;
  std::uint64_t ignore_up_to_seq = 0;
  bool ignore_any = false;
};

namespace {

std::string frame_extension(PixelFormat format) {
  switch (format) {
    case PixelFormat::png_bytes: return ".png";
    case PixelFormat::jpeg_bytes: return ".jpg";
    case PixelFormat::rgb8: return ".ppm";
  }
  return ".bin";
}

void write_annotation(const fs::path& dir, const Frame& frame, const SessionRecord& record) {
  std::ostringstream stem;
  stem << std::setw(6) << std::setfill('0') << frame.index;
  std::ofstream img(dir / (stem.str() + frame_extension(frame.format)), std::ios::binary);
  if (frame.format == PixelFormat::rgb8) {
    img << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  }
  img << frame.data;
  std::ofstream txt(dir / (stem.str() + ".txt"), std::ios::binary);
  txt << "frame " << frame.index << "\n" << "description: " << record.description << "\n";
  if (!img || !txt) throw LogError("cannot write annotation for frame " + stem.str());
}

void append_consultation(const fs::path& dir, const SessionRecord& record) {
  std::ostringstream stem;
  stem << std::setw(6) << std::setfill('0') << record.frame_index;
  std::ofstream txt(dir / (stem.str() + ".txt"), std::ios::binary | std::ios::app);
  txt << "consultation: " << (record.consultation ? record.consultation->text : "") << "\n";
}

}  // namespace

CameraNode::CameraNode(config::TaskConfig config, semantics::Backend& backend,
                       bus::Endpoint& bus, CameraOptions options)
    : config_(std::move(config)),
      backend_(backend),
      bus_(bus),
      options_(std::move(options)),
      state_(std::make_shared<State>()) {
  check_policy(options_.policy);
}

CameraNode::~CameraNode() = default;

std::vector<SessionRecord> CameraNode::records() const {
  std::lock_guard lock(state_->mu);
  auto out = state_->records;
  for (auto& r : out) {
    if (auto it = state_->consultations.find(r.frame_index); it != state_->consultations.end()) {
      r.consultation = it->second;
    }
  }
  return out;
}

CameraReport CameraNode::run(FrameSource& source) {
  CameraReport report;
  {
    std::lock_guard lock(state_->mu);
    state_->records.clear();
    state_->consultations.clear();
    state_->received = 0;
  }

  const auto description_topic =
      bus_.ensure_topic(bus::kImageDescriptionTopic, bus::kDefaultQueueDepth);
  bus::Subscription consultations;
  if (options_.listen_consultations) {
    const auto topic = bus_.ensure_topic(bus::kConsultationTopic, bus::kDefaultQueueDepth);
    {
      // Stale latched value.
      std::lock_guard lock(state_->mu);
      const auto latest = bus_.latest(topic);
      state_->ignore_any = latest.has_value();
      state_->ignore_up_to_seq = latest ? latest->seq : 0;
    }
    std::weak_ptr<State> weak = state_;
    bus::SubscribeOptions sub;
    sub.handler = [weak](const bus::MessageEnvelope& envelope) {
      auto state = weak.lock();
      if (!state) return;
      Consultation c;
      try {
        c = decode_consultation(envelope.payload);
      } catch (const MessageFormatError& e) {
        spdlog::warn("dropping malformed consultation seq {}: {}", envelope.seq, e.what());
        return;
      }
      c.elapsed = std::chrono::nanoseconds(0);
      std::lock_guard lock(state->mu);
      if (state->ignore_any && envelope.seq <= state->ignore_up_to_seq) return;
      state->consultations.insert_or_assign(c.frame_index, std::move(c));
      ++state->received;
      state->cv.notify_all();
    };
    consultations = bus_.subscribe(topic, std::move(sub));
  }

  if (options_.annotate_dir) {
    std::error_code ec;
    fs::create_directories(*options_.annotate_dir, ec);
    if (ec) report.log_error = "cannot create " + options_.annotate_dir->string();
  }

  const auto prompt_digest = fnv1a64(config_.camera.vision_prompt);
  const std::string backend_name(semantics::to_string(backend_.id()));
  std::optional<Timestamp> last_sample;

  while (true) {
    if (options_.stop && options_.stop->load()) break;
    if (options_.frame_budget && report.frames_read >= *options_.frame_budget) break;
    std::optional<Frame> frame;
    try {
      frame = source.next_frame();
    } catch (const SourceError& e) {
      spdlog::error("frame source failed: {}", e.what());
      report.source_error = e.what();
      break;
    }
    if (!frame) break;
    ++report.frames_read;
    if (!should_sample(frame->index, options_.policy, frame->capture_time, last_sample)) continue;
    last_sample = frame->capture_time;
    ++report.frames_sampled;

    semantics::DescribeResponse response;
    try {
      response = backend_.describe(*frame, config_.camera.vision_prompt);
    } catch (const BackendError& e) {
      ++report.backend_errors;
      spdlog::warn("frame {}: describe failed: {}", frame->index, e.what());
      continue;
    }

    ImageDescription description{config_.task_name, frame->index, frame->capture_time,
                                 response.text, backend_name, prompt_digest};
    SessionRecord record{frame->index, frame->capture_time, response.text, std::nullopt,
                         backend_name};
    {
      std::lock_guard lock(state_->mu);
      state_->records.push_back(record);
    }
    bus_.publish(description_topic, encode(description));
    ++report.descriptions_published;
    report.published_indices.push_back(frame->index);

    if (options_.annotate_dir && !report.log_error) {
      try {
        write_annotation(*options_.annotate_dir, *frame, record);
      } catch (const LogError& e) {
        spdlog::warn("{}", e.what());
        report.log_error = e.what();
      }
    }
  }

  if (options_.listen_consultations && !report.published_indices.empty()) {
    std::unique_lock lock(state_->mu);
    const auto all_in = [&] {
      for (auto idx : report.published_indices) {
        if (!state_->consultations.count(idx)) return false;
      }
      return true;
    };
    const auto deadline = std::chrono::steady_clock::now() + options_.drain_timeout;
    while (!all_in()) {
      if (options_.stop && options_.stop->load()) break;
      const auto slice = std::min(deadline, std::chrono::steady_clock::now() +
                                                std::chrono::milliseconds(50));
      state_->cv.wait_until(lock, slice);
      if (std::chrono::steady_clock::now() >= deadline) break;
    }
  }
  consultations.unsubscribe();

  const auto final_records = records();
  {
    std::lock_guard lock(state_->mu);
    report.consultations_received = state_->received;
  }

  if (options_.annotate_dir && !report.log_error) {
    for (const auto& r : final_records) append_consultation(*options_.annotate_dir, r);
  }
  if (options_.session_log) {
    try {
      write_session_log(*options_.session_log, final_records);
    } catch (const LogError& e) {
      spdlog::error("{}", e.what());
      report.log_error = e.what();
    }
  }
  return report;
}

CameraReport run_camera_node(const config::TaskConfig& config, FrameSource& source,
                             semantics::Backend& backend, bus::Endpoint& bus,
                             CameraOptions options) {
  CameraNode node(config, backend, bus, std::move(options));
  return node.run(source);
}

}  // namespace prm::camera
