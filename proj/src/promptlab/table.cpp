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

#include <json.hpp>

#include "prm/promptlab.hpp"

namespace prm::promptlab {

namespace {

constexpr std::string_view kSep = " | ";

struct Column {
  Axis axis;
  int kind;
  std::string title;
};

std::vector<Column> columns() {
  std::vector<Column> cols;
  for (auto k : kVisualKinds) cols.push_back({Axis::visual, int(k), std::string(title(k))});
  for (auto k : kLlmKinds) cols.push_back({Axis::llm, int(k), std::string(title(k))});
  return cols;
}

std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

std::string rstrip(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

std::string case_label(int id) { return "Case " + std::to_string(id); }

}  // namespace

std::string render_table(const StrategyMatrix& matrix) {
  if (matrix.rows.empty()) throw RenderError("empty strategy matrix");
  const auto cols = columns();
  std::size_t first = std::string_view("Cases").size();
  for (const auto& row : matrix.rows) {
    if (!row.best_visual || !row.best_llm) {
      throw RenderError(case_label(row.case_id) + " lacks a best mark on one axis");
    }
    first = std::max(first, case_label(row.case_id).size());
  }

  std::ostringstream out;
  std::size_t visual_width = 0;
  for (std::size_t i = 0; i < 3; ++i) visual_width += cols[i].title.size() + (i ? kSep.size() : 0);
  out << rstrip(pad("", first) + std::string(kSep) + pad("Visual prompts", visual_width) +
                std::string(kSep) + "LLM prompts")
      << '\n';
  std::string header = pad("Cases", first);
  std::string rule(first, '-');
  for (const auto& c : cols) {
    header += std::string(kSep) + c.title;
    rule += "-+-" + std::string(c.title.size(), '-');
  }
  out << rstrip(header) << '\n' << rule << '\n';
  for (const auto& row : matrix.rows) {
    std::string line = pad(case_label(row.case_id), first);
    for (const auto& c : cols) {
      std::string mark;
      if (c.axis == Axis::visual && int(*row.best_visual) == c.kind) {
        mark = row.visual_tie ? "x*" : "x";
      } else if (c.axis == Axis::llm && int(*row.best_llm) == c.kind) {
        mark = row.llm_tie ? "x*" : "x";
      }
      line += std::string(kSep) + pad(mark, c.title.size());
    }
    out << rstrip(line) << '\n';
  }
  return out.str();
}

StrategyMatrix parse_table(std::string_view text) {
  StrategyMatrix matrix;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("Case ", 0) != 0) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto bar = line.find('|', start);
      cells.push_back(trim(std::string_view(line).substr(start, bar - start)));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    if (cells.size() != 7) throw RenderError("malformed table row: " + line);
    StrategyMatrix::Row row;
    try {
      std::size_t used = 0;
      const auto id_text = cells[0].substr(5);
      row.case_id = std::stoi(id_text, &used);
      if (used != id_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw RenderError("bad case label: " + cells[0]);
    }
    for (int i = 0; i < 6; ++i) {
      const auto& cell = cells[std::size_t(i) + 1];
      if (cell.empty()) continue;
      if (cell != "x" && cell != "x*") throw RenderError("bad mark '" + cell + "' in " + cells[0]);
      const bool tie = cell == "x*";
      if (i < 3) {
        if (row.best_visual) throw RenderError(cells[0] + " has two visual marks");
        row.best_visual = kVisualKinds[i];
        row.visual_tie = tie;
      } else {
        if (row.best_llm) throw RenderError(cells[0] + " has two llm marks");
        row.best_llm = kLlmKinds[i - 3];
        row.llm_tie = tie;
      }
    }
    if (!row.best_visual || !row.best_llm) {
      throw RenderError(cells[0] + " lacks a mark on one axis");
    }
    matrix.rows.push_back(row);
  }
  if (matrix.rows.empty()) throw RenderError("no table rows");
  return matrix;
}

Tallies summarize(const StrategyMatrix& matrix) {
  Tallies t;
  for (auto k : kVisualKinds) t.visual[k] = 0;
  for (auto k : kLlmKinds) t.llm[k] = 0;
  for (const auto& row : matrix.rows) {
    if (row.best_visual) ++t.visual[*row.best_visual];
    if (row.best_llm) ++t.llm[*row.best_llm];
  }
  return t;
}

std::string render_tallies(const Tallies& tallies) {
  std::ostringstream out;
  out << "visual:";
  for (const auto& [k, n] : tallies.visual) out << ' ' << to_string(k) << '=' << n;
  out << "\nllm:";
  for (const auto& [k, n] : tallies.llm) out << ' ' << to_string(k) << '=' << n;
  out << '\n';
  return out.str();
}

std::string records_jsonl(const std::vector<EvaluationRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["case_id"] = r.case_id;
    j["visual"] = to_string(r.visual);
    j["llm"] = to_string(r.llm);
    j["vision_prompt"] = r.vision_prompt;
    j["llm_prompt"] = r.llm_prompt;
    j["description"] = r.description;
    j["consultation"] = r.consultation;
    j["score"] = r.score ? nlohmann::ordered_json(*r.score) : nlohmann::ordered_json(nullptr);
    j["scorer"] = r.scorer == Scorer::rubric ? "rubric" : "human";
    j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_records(const std::filesystem::path& path,
                   const std::vector<EvaluationRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string());
  out << records_jsonl(records);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace prm::promptlab
