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

#include <json.hpp>

#include "prm/consultation.hpp"

namespace prm::consultation {

void ConsoleSink::deliver(const Consultation& consultation) {
  std::lock_guard lock(mu_);
  out_ << "[frame " << consultation.frame_index << "] " << consultation.text << '\n';
  out_.flush();
}

JsonlSink::JsonlSink(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string());
}

void JsonlSink::deliver(const Consultation& consultation) {
  nlohmann::ordered_json j;
  j["frame_index"] = consultation.frame_index;
  j["text"] = consultation.text;
  j["model_tag"] = consultation.model_tag;
  j["temperature"] = consultation.temperature;
  std::lock_guard lock(mu_);
  out_ << j.dump() << '\n';
  out_.flush();
}

}  // namespace prm::consultation
