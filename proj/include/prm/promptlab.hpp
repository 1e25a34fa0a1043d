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

// Prompt-strategy evaluation: run cases under every visual/LLM prompt
// strategy, score the outputs with a rubric and render the best-prompt table.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prm/consultation.hpp"
#include "prm/semantics.hpp"

namespace prm::promptlab {

enum class Axis { visual, llm };
enum class VisualKind { focused_description, behavioral_description, ontological };
enum class LlmKind { consultative, action_oriented, ontological };

inline constexpr VisualKind kVisualKinds[] = {VisualKind::focused_description,
                                              VisualKind::behavioral_description,
                                              VisualKind::ontological};
inline constexpr LlmKind kLlmKinds[] = {LlmKind::consultative, LlmKind::action_oriented,
                                        LlmKind::ontological};

std::string_view to_string(Axis axis);
/// Machine names, e.g. "behavioral_description", "action_oriented".
std::string_view to_string(VisualKind kind);
std::string_view to_string(LlmKind kind);
/// Column titles, e.g. "Behavioral Description", "Action-Oriented".
std::string_view title(VisualKind kind);
std::string_view title(LlmKind kind);

/// Case-insensitive; '-' and ' ' count as '_'.
std::optional<Axis> parse_axis(std::string_view text);
std::optional<VisualKind> parse_visual_kind(std::string_view text);
std::optional<LlmKind> parse_llm_kind(std::string_view text);

class PromptlabError : public Error {
 public:
  using Error::Error;
};

/// The six prompt templates, one per (axis, kind).
class StrategySet {
 public:
  /// The shipped example phrasing for each kind.
  static StrategySet builtin();

  const std::string& visual(VisualKind kind) const;
  const std::string& llm(LlmKind kind) const;
  void set_visual(VisualKind kind, std::string text);
  void set_llm(LlmKind kind, std::string text);
  std::size_t size() const { return visual_.size() + llm_.size(); }

 private:
  std::map<VisualKind, std::string> visual_;
  std::map<LlmKind, std::string> llm_;
};

struct ScenarioCase {
  int case_id = 0;
  std::string label;
  std::vector<std::string> frames;

  bool operator==(const ScenarioCase&) const = default;
};

/// The ten shipped scenario titles, in case order.
const std::vector<std::string>& builtin_case_titles();

struct CaseFile {
  std::vector<ScenarioCase> cases;
  StrategySet strategies = StrategySet::builtin();
};

/// YAML: {cases: [{case_id, label, frames: [path...]}], strategies?:
/// {visual: {kind: text}, llm: {kind: text}}}. Frame paths resolve against
/// the file's directory. Throws PromptlabError or IoError.
CaseFile load_cases(const std::filesystem::path& path);
CaseFile parse_cases(std::string_view yaml, const std::filesystem::path& base_dir = {});

enum class Scorer { rubric, human };

struct EvaluationRecord {
  int case_id = 0;
  VisualKind visual = VisualKind::focused_description;
  LlmKind llm = LlmKind::consultative;
  std::string vision_prompt;
  std::string llm_prompt;
  std::string description;
  std::string consultation;
  std::optional<double> score;
  Scorer scorer = Scorer::rubric;
  std::optional<std::string> error;

  bool operator==(const EvaluationRecord&) const = default;
};

struct MatrixOptions {
  std::vector<VisualKind> visual_kinds{std::begin(kVisualKinds), std::end(kVisualKinds)};
  std::vector<LlmKind> llm_kinds{std::begin(kLlmKinds), std::end(kLlmKinds)};
  /// Cells run concurrently up to this bound.
  unsigned parallelism = 4;
  double temperature = 0.0;
};

/// One record per (case, visual kind, llm kind), ordered by that triple.
/// Each case is described from its first frame, labeled with the case label.
std::vector<EvaluationRecord> run_matrix(const std::vector<ScenarioCase>& cases,
                                         const StrategySet& strategies,
                                         semantics::Backend& backend,
                                         consultation::LlmClient& llm,
                                         const MatrixOptions& options = {});

struct RubricKey {
  int case_id = 0;
  Axis axis = Axis::visual;
  /// Index into kVisualKinds or kLlmKinds.
  int kind = 0;

  auto operator<=>(const RubricKey&) const = default;
};

using Rubric = std::map<RubricKey, double>;

RubricKey rubric_key(int case_id, VisualKind kind);
RubricKey rubric_key(int case_id, LlmKind kind);

class RubricError : public PromptlabError {
 public:
  using PromptlabError::PromptlabError;
};

/// TSV rows: case_id, axis, kind, score in [0, 1]. A header row starting
/// with "case_id" and '#' comments are skipped. Throws RubricError.
Rubric parse_rubric(std::string_view text);
Rubric load_rubric(const std::filesystem::path& path);

struct StrategyMatrix {
  struct Row {
    int case_id = 0;
    std::optional<VisualKind> best_visual;
    std::optional<LlmKind> best_llm;
    bool visual_tie = false;
    bool llm_tie = false;

    bool operator==(const Row&) const = default;
  };
  std::vector<Row> rows;

  bool operator==(const StrategyMatrix&) const = default;
};

struct ScoredRun {
  std::vector<EvaluationRecord> records;
  StrategyMatrix matrix;
};

/// A record scores the mean of its visual and llm rubric entries. The best
/// kind per axis is the highest score; ties go to the earlier kind and set
/// the tie flag. Throws RubricError naming a missing triple.
ScoredRun score_records(std::vector<EvaluationRecord> records, const Rubric& rubric);

class RenderError : public PromptlabError {
 public:
  using PromptlabError::PromptlabError;
};

/// Fixed-width table, one row per case, "x" under the best kind of each
/// axis ("x*" when tied). Throws RenderError for an empty or partial matrix.
std::string render_table(const StrategyMatrix& matrix);
/// Inverse of render_table. Throws RenderError.
StrategyMatrix parse_table(std::string_view text);

struct Tallies {
  std::map<VisualKind, int> visual;
  std::map<LlmKind, int> llm;

  bool operator==(const Tallies&) const = default;
};

Tallies summarize(const StrategyMatrix& matrix);
std::string render_tallies(const Tallies& tallies);

/// JSONL, one record per line.
std::string records_jsonl(const std::vector<EvaluationRecord>& records);
void write_records(const std::filesystem::path& path,
                   const std::vector<EvaluationRecord>& records);

}  // namespace prm::promptlab
