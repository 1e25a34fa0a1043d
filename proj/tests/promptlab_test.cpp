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

#include <gtest/gtest.h>
#include <json.hpp>

#include "prm/promptlab.hpp"
#include "support/fixtures.hpp"

namespace prm::promptlab {
namespace {

std::string full_rubric(int cases, int best_visual, int best_llm) {
  std::string text = "case_id\taxis\tkind\tscore\n";
  for (int c = 1; c <= cases; ++c) {
    for (int k = 0; k < 3; ++k) {
      text += std::to_string(c) + "\tvisual\t" + std::string(to_string(kVisualKinds[k])) + "\t" +
              (k == best_visual ? "1.0" : "0.0") + "\n";
      text += std::to_string(c) + "\tllm\t" + std::string(to_string(kLlmKinds[k])) + "\t" +
              (k == best_llm ? "1.0" : "0.0") + "\n";
    }
  }
  return text;
}

std::vector<EvaluationRecord> bare_records(int cases) {
  std::vector<EvaluationRecord> out;
  for (int c = 1; c <= cases; ++c) {
    for (auto v : kVisualKinds) {
      for (auto l : kLlmKinds) {
        EvaluationRecord r;
        r.case_id = c;
        r.visual = v;
        r.llm = l;
        out.push_back(r);
      }
    }
  }
  return out;
}

TEST(Kinds, NamesAndParsing) {
  EXPECT_EQ(title(VisualKind::behavioral_description), "Behavioral Description");
  EXPECT_EQ(title(LlmKind::action_oriented), "Action-Oriented");
  EXPECT_EQ(parse_llm_kind("Action-Oriented"), LlmKind::action_oriented);
  EXPECT_EQ(parse_visual_kind("behavioral description"), VisualKind::behavioral_description);
  EXPECT_EQ(parse_visual_kind("focused"), VisualKind::focused_description);
  EXPECT_EQ(parse_axis("LLM"), Axis::llm);
  EXPECT_FALSE(parse_llm_kind("bossy"));
}

TEST(Strategies, BuiltinsAndOverrides) {
  auto s = StrategySet::builtin();
  EXPECT_EQ(s.size(), 6u);
  EXPECT_EQ(s.visual(VisualKind::focused_description),
            "Describe the driver's current level of focus on driving based on the visual cues.");
  s.set_llm(LlmKind::ontological, "custom");
  EXPECT_EQ(s.llm(LlmKind::ontological), "custom");
  EXPECT_THROW(s.set_visual(VisualKind::ontological, ""), PromptlabError);
  EXPECT_EQ(builtin_case_titles().size(), 10u);
  EXPECT_EQ(builtin_case_titles()[0], "Drinking Coffee during driving");
}

TEST(Cases, ParseAndResolve) {
  const auto file = parse_cases(R"(cases:
  - case_id: 2
    label: "x"
    frames: [a.png, /abs/b.png]
strategies:
  visual:
    ontological: "list entities"
)",
                                "/base");
  ASSERT_EQ(file.cases.size(), 1u);
  EXPECT_EQ(file.cases[0].frames, (std::vector<std::string>{"/base/a.png", "/abs/b.png"}));
  EXPECT_EQ(file.strategies.visual(VisualKind::ontological), "list entities");
  EXPECT_THROW(parse_cases("nothing: 1"), PromptlabError);
  EXPECT_THROW(parse_cases("cases:\n  - {case_id: 1, label: a}\n  - {case_id: 1, label: b}\n"),
               PromptlabError);
  EXPECT_THROW(parse_cases("cases: []\nstrategies: {visual: {bogus: t}}\n"), PromptlabError);
  EXPECT_THROW(load_cases("/nonexistent.yaml"), IoError);
}

TEST(Cases, ShippedFixture) {
  const auto file = load_cases(testing::data_dir() / "promptlab" / "cases.yaml");
  ASSERT_EQ(file.cases.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(file.cases[i].case_id, static_cast<int>(i + 1));
    EXPECT_EQ(file.cases[i].label, builtin_case_titles()[i]);
  }
}

TEST(Rubric, ParseAndErrors) {
  const auto r = parse_rubric("# comment\ncase_id\taxis\tkind\tscore\n1\tvisual\tontological\t0.5\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r.at(rubric_key(1, VisualKind::ontological)), 0.5);
  EXPECT_THROW(parse_rubric("1\tvisual\tontological\n"), RubricError);
  EXPECT_THROW(parse_rubric("x\tvisual\tontological\t1\n"), RubricError);
  EXPECT_THROW(parse_rubric("1\tsmell\tontological\t1\n"), RubricError);
  EXPECT_THROW(parse_rubric("1\tllm\tfocused\t1\n"), RubricError);
  EXPECT_THROW(parse_rubric("1\tllm\tconsultative\t1.5\n"), RubricError);
  EXPECT_THROW(parse_rubric("1\tllm\tconsultative\tabc\n"), RubricError);
  EXPECT_THROW(parse_rubric("1\tllm\tconsultative\t1\n1\tllm\tconsultative\t0\n"), RubricError);
}

TEST(Score, BestAndMeanScore) {
  const auto run = score_records(bare_records(2), parse_rubric(full_rubric(2, 1, 2)));
  ASSERT_EQ(run.matrix.rows.size(), 2u);
  EXPECT_EQ(run.matrix.rows[0].best_visual, VisualKind::behavioral_description);
  EXPECT_EQ(run.matrix.rows[0].best_llm, LlmKind::ontological);
  EXPECT_FALSE(run.matrix.rows[0].visual_tie);
  for (const auto& r : run.records) {
    const double want = ((r.visual == VisualKind::behavioral_description) +
                         (r.llm == LlmKind::ontological)) / 2.0;
    EXPECT_DOUBLE_EQ(*r.score, want);
  }
}

TEST(Score, TiesGoToEarlierKind) {
  auto rubric = parse_rubric(full_rubric(1, 2, 1));
  rubric[rubric_key(1, VisualKind::focused_description)] = 1.0;
  const auto run = score_records(bare_records(1), rubric);
  EXPECT_EQ(run.matrix.rows[0].best_visual, VisualKind::focused_description);
  EXPECT_TRUE(run.matrix.rows[0].visual_tie);
  EXPECT_FALSE(run.matrix.rows[0].llm_tie);
  EXPECT_NE(render_table(run.matrix).find("x*"), std::string::npos);
}

TEST(Score, MissingEntryNamed) {
  auto rubric = parse_rubric(full_rubric(1, 0, 0));
  rubric.erase(rubric_key(1, LlmKind::action_oriented));
  try {
    score_records(bare_records(1), rubric);
    FAIL();
  } catch (const RubricError& e) {
    EXPECT_NE(std::string(e.what()).find("action_oriented"), std::string::npos);
  }
}

TEST(Table, RenderParseRoundTrip) {
  StrategyMatrix m;
  m.rows.push_back({1, VisualKind::ontological, LlmKind::action_oriented, false, false});
  m.rows.push_back({10, VisualKind::focused_description, LlmKind::consultative, true, false});
  const auto text = render_table(m);
  EXPECT_EQ(parse_table(text), m);
  for (std::size_t pos = 0, nl; (nl = text.find('\n', pos)) != std::string::npos; pos = nl + 1) {
    EXPECT_NE(text[nl - 1], ' ');
  }
  EXPECT_THROW(render_table(StrategyMatrix{}), RenderError);
  StrategyMatrix partial;
  partial.rows.push_back({1, VisualKind::ontological, std::nullopt, false, false});
  EXPECT_THROW(render_table(partial), RenderError);
  EXPECT_THROW(parse_table("garbage"), RenderError);
}

TEST(Tallies, CountAndRender) {
  StrategyMatrix m;
  m.rows.push_back({1, VisualKind::ontological, LlmKind::action_oriented, false, false});
  m.rows.push_back({2, VisualKind::ontological, LlmKind::consultative, false, false});
  const auto t = summarize(m);
  EXPECT_EQ(t.visual.at(VisualKind::ontological), 2);
  EXPECT_EQ(t.visual.at(VisualKind::focused_description), 0);
  EXPECT_EQ(render_tallies(t),
            "visual: focused_description=0 behavioral_description=0 ontological=2\n"
            "llm: consultative=1 action_oriented=1 ontological=0\n");
}

class ScriptedLlm final : public consultation::LlmClient {
 public:
  std::string complete(const consultation::LlmRequest& r) override {
    if (r.user_text.find("fail") != std::string::npos) throw BackendUnavailable("down");
    return "advice for: " + r.user_text;
  }
  std::string model_tag() const override { return "scripted"; }
};

TEST(Matrix, RunsEveryTriple) {
  const auto file = load_cases(testing::data_dir() / "promptlab" / "cases.yaml");
  auto script = std::make_shared<const semantics::MockScript>(
      semantics::MockScript::load(testing::data_dir() / "promptlab" / "mock_script.json"));
  semantics::MockBackend backend(script);
  ScriptedLlm llm;
  MatrixOptions o;
  o.parallelism = 3;
  const auto records = run_matrix(file.cases, file.strategies, backend, llm, o);
  ASSERT_EQ(records.size(), 90u);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    EXPECT_EQ(r.case_id, static_cast<int>(i / 9 + 1));
    EXPECT_EQ(r.visual, kVisualKinds[(i / 3) % 3]);
    EXPECT_EQ(r.llm, kLlmKinds[i % 3]);
    EXPECT_FALSE(r.error);
    EXPECT_NE(r.description, script->fallback());
    EXPECT_EQ(r.consultation, "advice for: " + r.description);
  }
  // Same output regardless of parallelism.
  o.parallelism = 1;
  EXPECT_EQ(run_matrix(file.cases, file.strategies, backend, llm, o), records);
}

TEST(Matrix, ErrorsStayInTheirCell) {
  testing::TempDir dir;
  testing::spit(dir / "bad.png", "nope");
  std::vector<ScenarioCase> cases{
      {1, "fine", {(testing::data_dir() / "promptlab" / "frames" / "case01.png").string()}},
      {2, "broken", {(dir / "bad.png").string()}},
      {3, "empty", {}},
  };
  auto script = std::make_shared<const semantics::MockScript>(
      std::vector<semantics::MockScript::Entry>{{"fine", std::nullopt, "fail please"}}, "ok");
  semantics::MockBackend backend(script);
  ScriptedLlm llm;
  const auto records = run_matrix(cases, StrategySet::builtin(), backend, llm);
  ASSERT_EQ(records.size(), 27u);
  for (const auto& r : records) EXPECT_TRUE(r.error) << r.case_id;
  const auto jsonl = records_jsonl(records);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 27);
  const auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  EXPECT_EQ(first["case_id"], 1);
  EXPECT_EQ(first["error"], "down");
}

TEST(Golden, ShippedTableParses) {
  const auto text = testing::slurp(testing::golden_dir() / "strategy_table.txt");
  const auto table = text.substr(0, text.find("\n\n") + 1);
  const auto m = parse_table(table);
  EXPECT_EQ(m.rows.size(), 10u);
  EXPECT_EQ(render_table(m), table);
}

}  // namespace
}  // namespace prm::promptlab
