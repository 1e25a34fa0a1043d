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

#include <fstream>

#include <json.hpp>

#include "prm/camera.hpp"

namespace prm::camera {

using nlohmann::ordered_json;

std::string session_record_json(const SessionRecord& record) {
  ordered_json j;
  j["frame_index"] = record.frame_index;
  j["capture_time"] = record.capture_time.count();
  j["description"] = record.description;
  if (record.consultation) {
    j["consultation"] = ordered_json{{"text", record.consultation->text},
                                     {"model_tag", record.consultation->model_tag},
                                     {"temperature", record.consultation->temperature}};
  } else {
    j["consultation"] = nullptr;
  }
  j["backend_id"] = record.backend_id;
  return j.dump();
}

void write_session_log(const std::filesystem::path& path,
                       const std::vector<SessionRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LogError("cannot open session log " + path.string());
  for (const auto& r : records) out << session_record_json(r) << '\n';
  out.flush();
  if (!out) throw LogError("failed writing session log " + path.string());
}

std::vector<SessionRecord> read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open session log " + path.string());
  std::vector<SessionRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      SessionRecord r;
      r.frame_index = j.at("frame_index").get<std::uint64_t>();
      r.capture_time = Timestamp(j.at("capture_time").get<std::int64_t>());
      r.description = j.at("description").get<std::string>();
      r.backend_id = j.at("backend_id").get<std::string>();
      const auto& c = j.at("consultation");
      if (!c.is_null()) {
        Consultation consultation;
        consultation.frame_index = r.frame_index;
        consultation.text = c.at("text").get<std::string>();
        consultation.model_tag = c.at("model_tag").get<std::string>();
        consultation.temperature = c.at("temperature").get<double>();
        r.consultation = std::move(consultation);
      }
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw LogError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace prm::camera
