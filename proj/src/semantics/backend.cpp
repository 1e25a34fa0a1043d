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
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "prm/semantics.hpp"

namespace prm::semantics {

std::string_view to_string(BackendId id) {
  switch (id) {
    case BackendId::llava: return "llava";
    case BackendId::minigpt4: return "minigpt4";
    case BackendId::sam: return "sam";
    case BackendId::mock: return "mock";
  }
  return "unknown";
}

BackendId backend_id_for(config::DescriptionMethod method) {
  switch (method) {
    case config::DescriptionMethod::llava: return BackendId::llava;
    case config::DescriptionMethod::minigpt4: return BackendId::minigpt4;
    case config::DescriptionMethod::sam: return BackendId::sam;
    case config::DescriptionMethod::mock: return BackendId::mock;
  }
  throw std::invalid_argument("unknown description method");
}

std::string render_mask_summary(const MaskSummary& summary) {
  const auto n = summary.mask_count();
  double largest = 0.0;
  for (const auto& m : summary.masks) largest = std::max(largest, m.area_fraction);
  const long pct = std::lround(largest * 100.0);
  return std::to_string(n) + (n == 1 ? " region detected" : " regions detected") +
         "; largest covers " + std::to_string(pct) + "% of frame";
}

DescribeResponse describe(const BackendSpec& spec, const Frame& frame,
                          std::string_view vision_prompt) {
  return make_backend(spec)->describe(frame, vision_prompt);
}

MaskSummary segment(const BackendSpec& spec, const Frame& frame, std::string_view prompt) {
  if (spec.id != BackendId::sam) {
    throw std::invalid_argument("segment requires the sam backend, got " +
                                std::string(to_string(spec.id)));
  }
  return SamBackend(spec).segment(frame, prompt);
}

BackendRegistry BackendRegistry::with_builtins() {
  BackendRegistry r;
  auto http = [](const BackendSpec& s) -> std::unique_ptr<Backend> {
    return std::make_unique<HttpDescribeBackend>(s);
  };
  r.add(BackendId::llava, http);
  r.add(BackendId::minigpt4, http);
  r.add(BackendId::sam, [](const BackendSpec& s) -> std::unique_ptr<Backend> {
    return std::make_unique<SamBackend>(s);
  });
  r.add(BackendId::mock, [](const BackendSpec& s) -> std::unique_ptr<Backend> {
    return std::make_unique<MockBackend>(s.script);
  });
  return r;
}

void BackendRegistry::add(BackendId id, BackendFactory factory) {
  factories_[id] = std::move(factory);
}

std::unique_ptr<Backend> BackendRegistry::create(const BackendSpec& spec) const {
  auto it = factories_.find(spec.id);
  if (it == factories_.end()) {
    throw std::invalid_argument("no backend registered for " + std::string(to_string(spec.id)));
  }
  return it->second(spec);
}

std::vector<BackendId> BackendRegistry::missing() const {
  std::vector<BackendId> out;
  for (auto m : {config::DescriptionMethod::llava, config::DescriptionMethod::minigpt4,
                 config::DescriptionMethod::sam, config::DescriptionMethod::mock}) {
    const auto id = backend_id_for(m);
    if (!factories_.count(id)) out.push_back(id);
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  static const BackendRegistry registry = BackendRegistry::with_builtins();
  return registry.create(spec);
}

BackendSpec build_backend(const config::TaskConfig& config,
                          std::optional<std::string> endpoint_override,
                          const std::filesystem::path& base_dir) {
  namespace k = config::keys;
  BackendSpec spec;
  spec.id = backend_id_for(config.camera.method);
  switch (spec.id) {
    case BackendId::llava:
      if (!config.llava) throw config::MissingField(std::string(k::kLlava));
      spec.params.temperature = config.llava->temperature;
      if (config.llava->llama_version) {
        spec.params.llama_version = std::string(config::to_string(*config.llava->llama_version));
      }
      break;
    case BackendId::minigpt4:
      if (!config.minigpt4) throw config::MissingField(std::string(k::kMiniGpt4));
      spec.params.temperature = config.minigpt4->temperature;
      spec.params.configuration = config.minigpt4->configuration;
      break;
    case BackendId::sam:
      if (!config.sam) throw config::MissingField(std::string(k::kSam));
      spec.params.weights = config.sam->weights;
      break;
    case BackendId::mock: {
      if (!config.mock || !config.mock->script) {
        throw config::MissingField(std::string(k::kMock) + "." + std::string(k::kMockScript));
      }
      std::filesystem::path path(*config.mock->script);
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      spec.params.mock_script_path = path.string();
      spec.script = std::make_shared<const MockScript>(MockScript::load(path));
      return spec;
    }
  }
  if (endpoint_override) {
    spec.endpoint = std::move(endpoint_override);
  } else if (const char* env = std::getenv(std::string(kBackendUrlEnv).c_str());
             env != nullptr && *env != '\0') {
    spec.endpoint = env;
  } else {
    spec.endpoint = std::string(kDefaultEndpoint);
  }
  return spec;
}

}  // namespace prm::semantics
