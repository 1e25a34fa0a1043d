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
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "prm/semantics.hpp"

namespace prm::semantics {

MockScript::MockScript(std::vector<Entry> entries, std::string fallback)
    : entries_(std::move(entries)), fallback_(std::move(fallback)) {
  if (fallback_.empty()) throw Error("mock script: default text must not be empty");
  for (const auto& e : entries_) {
    if (e.text.empty()) throw Error("mock script: entry for '" + e.label + "' has empty text");
  }
}

MockScript MockScript::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("mock script: not a JSON object");
  try {
    std::vector<Entry> entries;
    if (auto it = j.find("entries"); it != j.end()) {
      for (const auto& e : *it) {
        Entry entry;
        entry.label = e.at("label").get<std::string>();
        if (auto p = e.find("prompt"); p != e.end() && !p->is_null()) {
          entry.prompt = p->get<std::string>();
        }
        entry.text = e.at("text").get<std::string>();
        entries.push_back(std::move(entry));
      }
    }
    return MockScript(std::move(entries), j.at("default").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("mock script: ") + e.what());
  }
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read mock script " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

const std::string& MockScript::lookup(const std::optional<std::string>& label,
                                      std::string_view prompt) const {
  if (label) {
    for (const auto& e : entries_) {
      if (e.label == *label && (!e.prompt || *e.prompt == prompt)) return e.text;
    }
  }
  return fallback_;
}

MockBackend::MockBackend(std::shared_ptr<const MockScript> script) : script_(std::move(script)) {
  if (!script_) throw std::invalid_argument("mock backend requires a script");
}

DescribeResponse MockBackend::describe(const Frame& frame, std::string_view vision_prompt) {
  if (vision_prompt.empty()) throw std::invalid_argument("vision prompt must not be empty");
  const auto start = std::chrono::steady_clock::now();
  DescribeResponse response;
  response.text = script_->lookup(frame.label, vision_prompt);
  response.model_tag = "mock";
  response.latency = std::chrono::steady_clock::now() - start;
  return response;
}

}  // namespace prm::semantics
