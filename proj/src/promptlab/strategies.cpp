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
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "prm/promptlab.hpp"

namespace prm::promptlab {

namespace {

std::string normalize(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '-' || c == ' ') c = '_';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(Axis axis) { return axis == Axis::visual ? "visual" : "llm"; }

std::string_view to_string(VisualKind kind) {
  switch (kind) {
    case VisualKind::focused_description: return "focused_description";
    case VisualKind::behavioral_description: return "behavioral_description";
    case VisualKind::ontological: return "ontological";
  }
  return "unknown";
}

std::string_view to_string(LlmKind kind) {
  switch (kind) {
    case LlmKind::consultative: return "consultative";
    case LlmKind::action_oriented: return "action_oriented";
    case LlmKind::ontological: return "ontological";
  }
  return "unknown";
}

std::string_view title(VisualKind kind) {
  switch (kind) {
    case VisualKind::focused_description: return "Focused Description";
    case VisualKind::behavioral_description: return "Behavioral Description";
    case VisualKind::ontological: return "Ontological";
  }
  return "unknown";
}

std::string_view title(LlmKind kind) {
  switch (kind) {
    case LlmKind::consultative: return "Consultative";
    case LlmKind::action_oriented: return "Action-Oriented";
    case LlmKind::ontological: return "Ontological";
  }
  return "unknown";
}

std::optional<Axis> parse_axis(std::string_view text) {
  const auto t = normalize(text);
  if (t == "visual") return Axis::visual;
  if (t == "llm") return Axis::llm;
  return std::nullopt;
}

std::optional<VisualKind> parse_visual_kind(std::string_view text) {
  const auto t = normalize(text);
  for (auto k : kVisualKinds) {
    if (t == to_string(k)) return k;
  }
  if (t == "focused") return VisualKind::focused_description;
  if (t == "behavioral") return VisualKind::behavioral_description;
  return std::nullopt;
}

std::optional<LlmKind> parse_llm_kind(std::string_view text) {
  const auto t = normalize(text);
  for (auto k : kLlmKinds) {
    if (t == to_string(k)) return k;
  }
  return std::nullopt;
}

StrategySet StrategySet::builtin() {
  StrategySet s;
  s.visual_[VisualKind::focused_description] =
      "Describe the driver's current level of focus on driving based on the visual cues.";
  s.visual_[VisualKind::behavioral_description] =
      "Describe the driver's overall behavior, including any distractions or signs of fatigue.";
  s.visual_[VisualKind::ontological] =
      "Identify and describe the ontological entities related to driving focus in the current "
      "scene.";
  s.llm_[LlmKind::consultative] =
      "Based on the visual description, provide a consultation to the driver about their "
      "current level of focus on driving.";
  s.llm_[LlmKind::action_oriented] =
      "Suggest actions the driver should take to improve their focus on driving based on the "
      "visual description.";
  s.llm_[LlmKind::ontological] =
      "Provide a consultation to the driver based on the identified ontological entities "
      "related to driving focus.";
  return s;
}

const std::string& StrategySet::visual(VisualKind kind) const { return visual_.at(kind); }
const std::string& StrategySet::llm(LlmKind kind) const { return llm_.at(kind); }

void StrategySet::set_visual(VisualKind kind, std::string text) {
  if (text.empty()) throw PromptlabError("empty template for " + std::string(to_string(kind)));
  visual_[kind] = std::move(text);
}

void StrategySet::set_llm(LlmKind kind, std::string text) {
  if (text.empty()) throw PromptlabError("empty template for " + std::string(to_string(kind)));
  llm_[kind] = std::move(text);
}

const std::vector<std::string>& builtin_case_titles() {
  static const std::vector<std::string> titles{
      "Drinking Coffee during driving",
      "Focus on the road during driving",
      "holding a cup during driving",
      "looking down during driving",
      "looking to passenger during driving",
      "using radio during driving",
      "using mobile during driving",
      "sleeping during driving",
      "smoking during driving",
      "speaking in mobile during driving",
  };
  return titles;
}

CaseFile parse_cases(std::string_view yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw PromptlabError(std::string("cases file: ") + e.what());
  }
  if (!root.IsMap() || !root["cases"] || !root["cases"].IsSequence()) {
    throw PromptlabError("cases file needs a 'cases' list");
  }
  CaseFile file;
  std::set<int> ids;
  try {
    for (const auto& node : root["cases"]) {
      ScenarioCase c;
      c.case_id = node["case_id"].as<int>();
      c.label = node["label"].as<std::string>();
      if (c.label.empty()) throw PromptlabError("case " + std::to_string(c.case_id) + ": empty label");
      if (const auto frames = node["frames"]) {
        for (const auto& f : frames) {
          std::filesystem::path p(f.as<std::string>());
          if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
          c.frames.push_back(p.string());
        }
      }
      if (!ids.insert(c.case_id).second) {
        throw PromptlabError("duplicate case_id " + std::to_string(c.case_id));
      }
      file.cases.push_back(std::move(c));
    }
    if (const auto strategies = root["strategies"]) {
      if (const auto v = strategies["visual"]) {
        for (const auto& kv : v) {
          const auto name = kv.first.as<std::string>();
          const auto kind = parse_visual_kind(name);
          if (!kind) throw PromptlabError("unknown visual strategy " + name);
          file.strategies.set_visual(*kind, kv.second.as<std::string>());
        }
      }
      if (const auto l = strategies["llm"]) {
        for (const auto& kv : l) {
          const auto name = kv.first.as<std::string>();
          const auto kind = parse_llm_kind(name);
          if (!kind) throw PromptlabError("unknown llm strategy " + name);
          file.strategies.set_llm(*kind, kv.second.as<std::string>());
        }
      }
    }
  } catch (const YAML::Exception& e) {
    throw PromptlabError(std::string("cases file: ") + e.what());
  }
  std::sort(file.cases.begin(), file.cases.end(),
            [](const ScenarioCase& a, const ScenarioCase& b) { return a.case_id < b.case_id; });
  return file;
}

CaseFile load_cases(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read cases file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_cases(buffer.str(), path.parent_path());
}

RubricKey rubric_key(int case_id, VisualKind kind) {
  return RubricKey{case_id, Axis::visual, static_cast<int>(kind)};
}

RubricKey rubric_key(int case_id, LlmKind kind) {
  return RubricKey{case_id, Axis::llm, static_cast<int>(kind)};
}

Rubric parse_rubric(std::string_view text) {
  Rubric rubric;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#' || line.rfind("case_id", 0) == 0) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(trim(std::string_view(line).substr(start, tab - start)));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const auto where = "rubric line " + std::to_string(lineno) + ": ";
    if (cols.size() != 4) throw RubricError(where + "expected 4 tab-separated columns");
    int case_id = 0;
    auto [p, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), case_id);
    if (ec != std::errc() || p != cols[0].data() + cols[0].size()) {
      throw RubricError(where + "bad case_id '" + cols[0] + "'");
    }
    const auto axis = parse_axis(cols[1]);
    if (!axis) throw RubricError(where + "bad axis '" + cols[1] + "'");
    RubricKey key;
    if (*axis == Axis::visual) {
      const auto kind = parse_visual_kind(cols[2]);
      if (!kind) throw RubricError(where + "bad visual kind '" + cols[2] + "'");
      key = rubric_key(case_id, *kind);
    } else {
      const auto kind = parse_llm_kind(cols[2]);
      if (!kind) throw RubricError(where + "bad llm kind '" + cols[2] + "'");
      key = rubric_key(case_id, *kind);
    }
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(cols[3], &used);
      if (used != cols[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw RubricError(where + "bad score '" + cols[3] + "'");
    }
    if (!(score >= 0.0 && score <= 1.0)) throw RubricError(where + "score outside [0, 1]");
    if (!rubric.emplace(key, score).second) throw RubricError(where + "duplicate entry");
  }
  return rubric;
}

Rubric load_rubric(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read rubric " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_rubric(buffer.str());
}

}  // namespace prm::promptlab
