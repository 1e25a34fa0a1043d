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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prm/messages.hpp"
#include "prm/session.hpp"
#include "prm/wire.hpp"

namespace prm::session {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool by_topic_seq(const RecordedEntry& a, const RecordedEntry& b) {
  return std::tie(a.envelope.topic, a.envelope.seq) < std::tie(b.envelope.topic, b.envelope.seq);
}

}  // namespace

std::vector<bus::MessageEnvelope> Recording::topic(std::string_view name) const {
  std::vector<bus::MessageEnvelope> out;
  for (const auto& e : entries) {
    if (e.envelope.topic == name) out.push_back(e.envelope);
  }
  return out;
}

SessionRecorder::SessionRecorder(bus::Endpoint& bus, const std::vector<bus::TopicName>& topics)
    : shared_(std::make_shared<Shared>()) {
  for (const auto& name : topics) {
    const auto handle = bus.ensure_topic(name, bus::kDefaultQueueDepth);
    {
      std::lock_guard lock(shared_->mu);
      auto latest = bus.latest(handle);
      shared_->skip_up_to[name.str()] =
          latest ? std::optional<std::uint64_t>(latest->seq) : std::nullopt;
    }
    std::weak_ptr<Shared> weak = shared_;
    bus::SubscribeOptions options;
    options.handler = [weak](const bus::MessageEnvelope& envelope) {
      auto shared = weak.lock();
      if (!shared) return;
      std::lock_guard lock(shared->mu);
      const auto& skip = shared->skip_up_to[envelope.topic];
      if (skip && envelope.seq <= *skip) return;
      shared->entries.push_back(RecordedEntry{envelope, wall_clock_iso8601()});
    };
    subs_.push_back(bus.subscribe(handle, std::move(options)));
  }
}

Recording SessionRecorder::snapshot(RecordingHeader header) const {
  Recording r;
  r.header = std::move(header);
  {
    std::lock_guard lock(shared_->mu);
    r.entries = shared_->entries;
  }
  std::stable_sort(r.entries.begin(), r.entries.end(), by_topic_seq);
  return r;
}

std::size_t SessionRecorder::size() const {
  std::lock_guard lock(shared_->mu);
  return shared_->entries.size();
}

void SessionRecorder::stop() {
  for (auto& s : subs_) s.unsubscribe();
}

void write_recording(const std::filesystem::path& path, const Recording& recording) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open recording " + path.string());
  if (recording.header) {
    ordered_json h;
    h["task_name"] = recording.header->task_name;
    h["config_digest"] = hex64(recording.header->config_digest);
    h["start_time"] = recording.header->start_time;
    out << h.dump() << '\n';
  }
  auto entries = recording.entries;
  std::stable_sort(entries.begin(), entries.end(), by_topic_seq);
  for (const auto& e : entries) {
    auto j = bus::wire::envelope_to_json(e.envelope);
    j["recv_time"] = e.recv_time;
    out << j.dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError("failed writing recording " + path.string());
}

Recording parse_recording(std::string_view text) {
  Recording r;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw RecordingError(lineno, "not a JSON object");
    if (!r.header && r.entries.empty() && j.contains("task_name")) {
      try {
        RecordingHeader h;
        h.task_name = j.at("task_name").get<std::string>();
        const auto digest = j.at("config_digest").get<std::string>();
        std::size_t used = 0;
        h.config_digest = std::stoull(digest, &used, 16);
        if (used != digest.size()) throw RecordingError(lineno, "bad config_digest");
        h.start_time = j.at("start_time").get<std::string>();
        r.header = std::move(h);
      } catch (const json::exception& e) {
        throw RecordingError(lineno, std::string("bad header: ") + e.what());
      } catch (const std::logic_error&) {
        throw RecordingError(lineno, "bad config_digest");
      }
      continue;
    }
    try {
      RecordedEntry entry;
      auto body = j;
      entry.recv_time = body.at("recv_time").get<std::string>();
      body.erase("recv_time");
      entry.envelope = bus::wire::envelope_from_json(body);
      r.entries.push_back(std::move(entry));
    } catch (const json::exception& e) {
      throw RecordingError(lineno, e.what());
    } catch (const Error& e) {
      throw RecordingError(lineno, e.what());
    }
  }
  if (!r.header && !r.entries.empty()) throw RecordingError(1, "missing header line");
  if (!std::is_sorted(r.entries.begin(), r.entries.end(), by_topic_seq)) {
    throw RecordingError(lineno, "entries not ordered by (topic, seq)");
  }
  return r;
}

Recording read_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read recording " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_recording(buffer.str());
}

std::size_t replay(const Recording& recording, bus::LocalBus& bus, ReplayOptions options) {
  std::vector<const RecordedEntry*> order;
  for (const auto& e : recording.entries) {
    if (!options.topics.empty() &&
        std::find(options.topics.begin(), options.topics.end(), e.envelope.topic) ==
            options.topics.end()) {
      continue;
    }
    order.push_back(&e);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return std::tie(a->envelope.publish_time, a->envelope.topic, a->envelope.seq) <
           std::tie(b->envelope.publish_time, b->envelope.topic, b->envelope.seq);
  });
  std::map<std::string, bus::TopicHandle> handles;
  for (const auto* e : order) {
    auto it = handles.find(e->envelope.topic);
    if (it == handles.end()) {
      it = handles.emplace(e->envelope.topic,
                           bus.ensure_topic(bus::TopicName(e->envelope.topic), bus::kDefaultQueueDepth))
               .first;
    }
    bus.republish(it->second, e->envelope);
  }
  return order.size();
}

AuditResult audit_causality(const Recording& recording) {
  AuditResult result;
  std::map<std::uint64_t, std::int64_t> described;  // frame index -> earliest publish time
  for (const auto& e : recording.entries) {
    if (e.envelope.topic != bus::kImageDescriptionTopic) continue;
    ++result.descriptions;
    try {
      const auto d = decode_description(e.envelope.payload);
      auto [it, fresh] = described.emplace(d.frame_index, e.envelope.publish_time);
      if (!fresh) it->second = std::min(it->second, e.envelope.publish_time);
    } catch (const MessageFormatError& err) {
      result.violations.push_back("description seq " + std::to_string(e.envelope.seq) +
                                  " undecodable: " + err.what());
    }
  }
  std::set<std::uint64_t> answered;
  for (const auto& e : recording.entries) {
    if (e.envelope.topic != bus::kConsultationTopic) continue;
    ++result.consultations;
    Consultation c;
    try {
      c = decode_consultation(e.envelope.payload);
    } catch (const MessageFormatError& err) {
      result.violations.push_back("consultation seq " + std::to_string(e.envelope.seq) +
                                  " undecodable: " + err.what());
      continue;
    }
    const auto idx = std::to_string(c.frame_index);
    auto d = described.find(c.frame_index);
    if (d == described.end()) {
      result.violations.push_back("consultation for frame " + idx + " has no description");
    } else if (d->second > e.envelope.publish_time) {
      result.violations.push_back("consultation for frame " + idx +
                                  " published before its description");
    }
    if (!answered.insert(c.frame_index).second) {
      result.violations.push_back("frame " + idx + " has more than one consultation");
    }
  }
  return result;
}

}  // namespace prm::session
