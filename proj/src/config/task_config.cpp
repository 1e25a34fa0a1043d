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
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "prm/config.hpp"

namespace prm::config {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join(std::string_view parent, std::string_view key) {
  if (parent.empty()) return std::string(key);
  return std::string(parent) + "." + std::string(key);
}

class Reader {
 public:
  explicit Reader(std::vector<std::string>& warnings) : warnings_(warnings) {}

  // Records keys of `map` that are not in `known` as warnings.
  void check_unknown(const YAML::Node& map, std::string_view path,
                     std::initializer_list<std::string_view> known) {
    for (const auto& entry : map) {
      if (!entry.first.IsScalar()) {
        warnings_.push_back(join(path, "<non-scalar key>"));
        continue;
      }
      const auto& key = entry.first.Scalar();
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        warnings_.push_back(join(path, key));
      }
    }
  }

 private:
  std::vector<std::string>& warnings_;
};

YAML::Node lookup(const YAML::Node& map, std::string_view key) {
  return map[std::string(key)];
}

bool absent(const YAML::Node& node) { return !node.IsDefined() || node.IsNull(); }

std::string required_string(const YAML::Node& map, std::string_view key, std::string_view path) {
  const auto node = lookup(map, key);
  const auto full = join(path, key);
  if (absent(node)) throw MissingField(full);
  if (!node.IsScalar()) throw TypeError(full, "expected a string");
  return node.Scalar();
}

std::optional<std::string> optional_string(const YAML::Node& map, std::string_view key,
                                           std::string_view path) {
  const auto node = lookup(map, key);
  if (absent(node)) return std::nullopt;
  if (!node.IsScalar()) throw TypeError(join(path, key), "expected a string");
  return node.Scalar();
}

double to_double(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw TypeError(path, "expected a number");
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw TypeError(path, "expected a number, got \"" + node.Scalar() + "\"");
  }
}

double required_double(const YAML::Node& map, std::string_view key, std::string_view path) {
  const auto node = lookup(map, key);
  const auto full = join(path, key);
  if (absent(node)) throw MissingField(full);
  return to_double(node, full);
}

std::optional<double> optional_double(const YAML::Node& map, std::string_view key,
                                      std::string_view path) {
  const auto node = lookup(map, key);
  if (absent(node)) return std::nullopt;
  return to_double(node, join(path, key));
}

template <typename Enum, typename Parser>
Enum required_enum(const YAML::Node& map, std::string_view key, std::string_view path,
                   Parser parse, std::string_view choices) {
  const auto text = required_string(map, key, path);
  auto value = parse(text);
  if (!value) {
    throw TypeError(join(path, key),
                    "\"" + text + "\" is not one of " + std::string(choices));
  }
  return *value;
}

// Returns the mapping under `key`, or an undefined node when the key is absent
// or null. Throws TypeError for non-mapping values.
YAML::Node section(const YAML::Node& root, std::string_view key) {
  const auto node = lookup(root, key);
  if (absent(node)) return YAML::Node(YAML::NodeType::Undefined);
  if (!node.IsMap()) throw TypeError(std::string(key), "expected a mapping");
  return node;
}

bool is_empty(const MiniGpt4Params& p) { return !p.configuration && !p.temperature; }
bool is_empty(const LlavaParams& p) { return !p.temperature && !p.llama_version; }
bool is_empty(const SamParams& p) { return !p.weights; }
bool is_empty(const MockParams& p) { return !p.script; }

bool in_temperature_range(double t) {
  return !std::isnan(t) && t >= kMinTemperature && t <= kMaxTemperature;
}

std::string range_message(double t) {
  return "temperature " + format_double(t) + " is outside [" + format_double(kMinTemperature) +
         ", " + format_double(kMaxTemperature) + "]";
}

}  // namespace

std::string_view to_string(DescriptionMethod method) {
  switch (method) {
    case DescriptionMethod::llava: return "llava";
    case DescriptionMethod::minigpt4: return "MiniGPT4";
    case DescriptionMethod::sam: return "SAM";
    case DescriptionMethod::mock: return "mock";
  }
  return "unknown";
}

std::string_view to_string(InputKind kind) {
  switch (kind) {
    case InputKind::webcam: return "webcam";
    case InputKind::video: return "video";
    case InputKind::frames: return "frames";
  }
  return "unknown";
}

std::string_view to_string(LlamaVersion version) {
  return version == LlamaVersion::v7b ? "7B" : "13B";
}

std::optional<DescriptionMethod> parse_description_method(std::string_view text) {
  const auto t = lower(text);
  if (t == "llava") return DescriptionMethod::llava;
  if (t == "minigpt4") return DescriptionMethod::minigpt4;
  if (t == "sam") return DescriptionMethod::sam;
  if (t == "mock") return DescriptionMethod::mock;
  return std::nullopt;
}

std::optional<InputKind> parse_input_kind(std::string_view text) {
  const auto t = lower(text);
  if (t == "webcam") return InputKind::webcam;
  if (t == "video") return InputKind::video;
  if (t == "frames") return InputKind::frames;
  return std::nullopt;
}

std::optional<LlamaVersion> parse_llama_version(std::string_view text) {
  const auto t = lower(text);
  if (t == "7b") return LlamaVersion::v7b;
  if (t == "13b") return LlamaVersion::v13b;
  return std::nullopt;
}

ParseResult parse_task_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw SyntaxError(e.mark.line + 1, e.msg);
  }
  if (absent(root)) throw MissingField(std::string(keys::kTaskName));
  if (!root.IsMap()) throw TypeError("<root>", "expected a mapping");

  ParseResult result;
  Reader reader(result.warnings);
  auto& cfg = result.config;
  using namespace keys;

  reader.check_unknown(root, "",
                       {kTaskName, kCameraNode, kConsultationNode, kMiniGpt4, kLlava, kSam, kMock});
  cfg.task_name = required_string(root, kTaskName, "");

  const auto camera = section(root, kCameraNode);
  if (!camera.IsDefined()) throw MissingField(std::string(kCameraNode));
  reader.check_unknown(camera, kCameraNode,
                       {kMethod, kVisionPrompt, kChooseInput, kInputVideo, kOutputVideo});
  cfg.camera.method = required_enum<DescriptionMethod>(
      camera, kMethod, kCameraNode, parse_description_method, "[llava, MiniGPT4, SAM, mock]");
  cfg.camera.vision_prompt = required_string(camera, kVisionPrompt, kCameraNode);
  cfg.camera.choose_input = required_enum<InputKind>(camera, kChooseInput, kCameraNode,
                                                     parse_input_kind, "[webcam, video, frames]");
  cfg.camera.input_video = optional_string(camera, kInputVideo, kCameraNode);
  cfg.camera.output_video = optional_string(camera, kOutputVideo, kCameraNode);

  const auto consultation = section(root, kConsultationNode);
  if (!consultation.IsDefined()) throw MissingField(std::string(kConsultationNode));
  reader.check_unknown(consultation, kConsultationNode, {kLlmPrompt, kGptTemperature});
  cfg.consultation.llm_prompt = required_string(consultation, kLlmPrompt, kConsultationNode);
  cfg.consultation.gpt_temperature =
      required_double(consultation, kGptTemperature, kConsultationNode);

  // A parameter block key that is present but empty yields an engaged, empty
  // block; an absent key yields nullopt.
  if (lookup(root, kMiniGpt4).IsDefined()) {
    const auto block = section(root, kMiniGpt4);
    MiniGpt4Params p;
    if (block.IsDefined()) {
      reader.check_unknown(block, kMiniGpt4, {kMiniGpt4Configuration, kMiniGpt4Temperature});
      p.configuration = optional_string(block, kMiniGpt4Configuration, kMiniGpt4);
      p.temperature = optional_double(block, kMiniGpt4Temperature, kMiniGpt4);
    }
    cfg.minigpt4 = p;
  }
  if (lookup(root, kLlava).IsDefined()) {
    const auto block = section(root, kLlava);
    LlavaParams p;
    if (block.IsDefined()) {
      reader.check_unknown(block, kLlava, {kLlavaTemperature, kLlamaVersion});
      p.temperature = optional_double(block, kLlavaTemperature, kLlava);
      if (auto v = optional_string(block, kLlamaVersion, kLlava)) {
        p.llama_version = parse_llama_version(*v);
        if (!p.llama_version) {
          throw TypeError(join(kLlava, kLlamaVersion), "\"" + *v + "\" is not one of [7B, 13B]");
        }
      }
    }
    cfg.llava = p;
  }
  if (lookup(root, kSam).IsDefined()) {
    const auto block = section(root, kSam);
    SamParams p;
    if (block.IsDefined()) {
      reader.check_unknown(block, kSam, {kSamWeights});
      p.weights = optional_string(block, kSamWeights, kSam);
    }
    cfg.sam = p;
  }
  if (lookup(root, kMock).IsDefined()) {
    const auto block = section(root, kMock);
    MockParams p;
    if (block.IsDefined()) {
      reader.check_unknown(block, kMock, {kMockScript});
      p.script = optional_string(block, kMockScript, kMock);
    }
    cfg.mock = p;
  }
  return result;
}

ParseResult load_task_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading config file " + path.string());
  return parse_task_config(buffer.str());
}

std::vector<Violation> validate(const TaskConfig& config) {
  using namespace keys;
  std::vector<Violation> out;
  const auto add = [&](std::string path, std::string message) {
    out.push_back({std::move(path), std::move(message)});
  };
  const std::string camera(kCameraNode);
  const std::string consultation(kConsultationNode);

  if (config.task_name.empty()) add(std::string(kTaskName), "must not be empty");
  if (config.camera.vision_prompt.empty()) {
    add(join(camera, kVisionPrompt), "must not be empty");
  }
  if (config.consultation.llm_prompt.empty()) {
    add(join(consultation, kLlmPrompt), "must not be empty");
  }
  if (!in_temperature_range(config.consultation.gpt_temperature)) {
    add(join(consultation, kGptTemperature), range_message(config.consultation.gpt_temperature));
  }
  if (config.camera.choose_input != InputKind::webcam &&
      (!config.camera.input_video || config.camera.input_video->empty())) {
    add(join(camera, kInputVideo),
        "required when Choose_input is " + std::string(to_string(config.camera.choose_input)));
  }

  const auto block_required = [&](std::string_view block) {
    add(std::string(block), "required when Image_Description_Method is " +
                                std::string(to_string(config.camera.method)) +
                                ", but it is absent or empty");
  };
  const auto field_required = [&](std::string_view block, std::string_view field) {
    add(join(block, field), "required when Image_Description_Method is " +
                                std::string(to_string(config.camera.method)));
  };

  switch (config.camera.method) {
    case DescriptionMethod::minigpt4:
      if (!config.minigpt4 || is_empty(*config.minigpt4)) {
        block_required(kMiniGpt4);
      } else {
        if (!config.minigpt4->configuration) field_required(kMiniGpt4, kMiniGpt4Configuration);
        if (!config.minigpt4->temperature) field_required(kMiniGpt4, kMiniGpt4Temperature);
      }
      break;
    case DescriptionMethod::llava:
      if (!config.llava || is_empty(*config.llava)) {
        block_required(kLlava);
      } else {
        if (!config.llava->temperature) field_required(kLlava, kLlavaTemperature);
        if (!config.llava->llama_version) field_required(kLlava, kLlamaVersion);
      }
      break;
    case DescriptionMethod::sam:
      if (!config.sam || is_empty(*config.sam)) block_required(kSam);
      break;
    case DescriptionMethod::mock:
      if (!config.mock || is_empty(*config.mock)) block_required(kMock);
      break;
  }

  if (config.minigpt4 && config.minigpt4->temperature &&
      !in_temperature_range(*config.minigpt4->temperature)) {
    add(join(kMiniGpt4, kMiniGpt4Temperature), range_message(*config.minigpt4->temperature));
  }
  if (config.llava && config.llava->temperature &&
      !in_temperature_range(*config.llava->temperature)) {
    add(join(kLlava, kLlavaTemperature), range_message(*config.llava->temperature));
  }
  return out;
}

std::string serialize(const TaskConfig& config) {
  using namespace keys;
  YAML::Emitter out;
  out.SetIndent(2);
  const auto key = [&](std::string_view k) { out << YAML::Key << std::string(k) << YAML::Value; };
  const auto quoted = [&](std::string_view k, const std::string& v) {
    key(k);
    out << YAML::DoubleQuoted << v;
  };
  const auto plain = [&](std::string_view k, std::string_view v) {
    key(k);
    out << std::string(v);
  };

  out << YAML::BeginMap;
  quoted(kTaskName, config.task_name);

  key(kCameraNode);
  out << YAML::BeginMap;
  plain(kMethod, to_string(config.camera.method));
  quoted(kVisionPrompt, config.camera.vision_prompt);
  plain(kChooseInput, to_string(config.camera.choose_input));
  if (config.camera.input_video) quoted(kInputVideo, *config.camera.input_video);
  if (config.camera.output_video) quoted(kOutputVideo, *config.camera.output_video);
  out << YAML::EndMap;

  key(kConsultationNode);
  out << YAML::BeginMap;
  quoted(kLlmPrompt, config.consultation.llm_prompt);
  plain(kGptTemperature, format_double(config.consultation.gpt_temperature));
  out << YAML::EndMap;

  const auto begin_block = [&](std::string_view k, bool empty) {
    key(k);
    if (empty) out << YAML::Flow;
    out << YAML::BeginMap;
  };

  if (config.minigpt4) {
    const auto& p = *config.minigpt4;
    begin_block(kMiniGpt4, is_empty(p));
    if (p.configuration) quoted(kMiniGpt4Configuration, *p.configuration);
    if (p.temperature) plain(kMiniGpt4Temperature, format_double(*p.temperature));
    out << YAML::EndMap;
  }
  if (config.llava) {
    const auto& p = *config.llava;
    begin_block(kLlava, is_empty(p));
    if (p.temperature) plain(kLlavaTemperature, format_double(*p.temperature));
    if (p.llama_version) quoted(kLlamaVersion, std::string(to_string(*p.llama_version)));
    out << YAML::EndMap;
  }
  if (config.sam) {
    const auto& p = *config.sam;
    begin_block(kSam, is_empty(p));
    if (p.weights) quoted(kSamWeights, *p.weights);
    out << YAML::EndMap;
  }
  if (config.mock) {
    const auto& p = *config.mock;
    begin_block(kMock, is_empty(p));
    if (p.script) quoted(kMockScript, *p.script);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  if (!out.good()) throw Error("serialize: " + out.GetLastError());
  return std::string(out.c_str()) + "\n";
}

std::uint64_t digest(const TaskConfig& config) { return fnv1a64(serialize(config)); }

}  // namespace prm::config
