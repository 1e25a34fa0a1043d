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
#include <atomic>
#include <functional>
#include <thread>

#include <spdlog/spdlog.h>

#include "prm/camera.hpp"
#include "prm/promptlab.hpp"

namespace prm::promptlab {

namespace {

// Runs fn(0..n-1) on up to `workers` threads.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (n == 0) return;
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string triple_name(int case_id, Axis axis, std::string_view kind) {
  return "case " + std::to_string(case_id) + " " + std::string(to_string(axis)) + " " +
         std::string(kind);
}

}  // namespace

std::vector<EvaluationRecord> run_matrix(const std::vector<ScenarioCase>& cases,
                                         const StrategySet& strategies,
                                         semantics::Backend& backend,
                                         consultation::LlmClient& llm,
                                         const MatrixOptions& options) {
  struct Described {
    std::string text;
    std::optional<std::string> error;
  };
  const auto nv = options.visual_kinds.size();
  const auto nl = options.llm_kinds.size();

  std::vector<std::optional<Frame>> frames(cases.size());
  std::vector<std::string> frame_errors(cases.size());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    if (cases[c].frames.empty()) {
      frame_errors[c] = "case has no frames";
      continue;
    }
    try {
      auto frame = camera::read_image_file(cases[c].frames.front(), 0);
      frame.label = cases[c].label;
      frames[c] = std::move(frame);
    } catch (const camera::SourceError& e) {
      frame_errors[c] = e.what();
    }
  }

  std::vector<Described> described(cases.size() * nv);
  parallel_for(described.size(), options.parallelism, [&](std::size_t i) {
    const auto c = i / nv;
    const auto kind = options.visual_kinds[i % nv];
    if (!frames[c]) {
      described[i].error = frame_errors[c];
      return;
    }
    try {
      described[i].text = backend.describe(*frames[c], strategies.visual(kind)).text;
    } catch (const BackendError& e) {
      described[i].error = e.what();
    }
  });

  std::vector<EvaluationRecord> records(cases.size() * nv * nl);
  parallel_for(records.size(), options.parallelism, [&](std::size_t i) {
    const auto c = i / (nv * nl);
    const auto v = (i / nl) % nv;
    const auto l = i % nl;
    auto& r = records[i];
    r.case_id = cases[c].case_id;
    r.visual = options.visual_kinds[v];
    r.llm = options.llm_kinds[l];
    r.vision_prompt = strategies.visual(r.visual);
    r.llm_prompt = strategies.llm(r.llm);
    const auto& d = described[c * nv + v];
    if (d.error) {
      r.error = *d.error;
      return;
    }
    r.description = d.text;
    try {
      ImageDescription desc;
      desc.frame_index = 0;
      desc.text = d.text;
      const auto request = consultation::build_llm_request(r.llm_prompt, desc, options.temperature);
      r.consultation = consultation::ask_llm(llm, request);
    } catch (const consultation::SkipSignal& e) {
      r.error = e.what();
    } catch (const BackendError& e) {
      r.error = e.what();
    }
  });
  for (const auto& r : records) {
    if (r.error) spdlog::warn("case {}: {}", r.case_id, *r.error);
  }
  return records;
}

ScoredRun score_records(std::vector<EvaluationRecord> records, const Rubric& rubric) {
  auto lookup = [&](const RubricKey& key, std::string_view kind) {
    auto it = rubric.find(key);
    if (it == rubric.end()) {
      throw RubricError("no rubric entry for " + triple_name(key.case_id, key.axis, kind));
    }
    return it->second;
  };

  // Per case, the scores seen on each axis.
  std::map<int, std::map<VisualKind, double>> visual_scores;
  std::map<int, std::map<LlmKind, double>> llm_scores;
  for (auto& r : records) {
    const double vs = lookup(rubric_key(r.case_id, r.visual), to_string(r.visual));
    const double ls = lookup(rubric_key(r.case_id, r.llm), to_string(r.llm));
    r.score = (vs + ls) / 2.0;
    r.scorer = Scorer::rubric;
    visual_scores[r.case_id][r.visual] = vs;
    llm_scores[r.case_id][r.llm] = ls;
  }

  ScoredRun run;
  for (const auto& [case_id, vmap] : visual_scores) {
    StrategyMatrix::Row row;
    row.case_id = case_id;
    // Kinds in enum order.
    double best = -1.0;
    for (const auto& [kind, s] : vmap) {
      if (s > best) {
        best = s;
        row.best_visual = kind;
        row.visual_tie = false;
      } else if (s == best) {
        row.visual_tie = true;
      }
    }
    best = -1.0;
    for (const auto& [kind, s] : llm_scores[case_id]) {
      if (s > best) {
        best = s;
        row.best_llm = kind;
        row.llm_tie = false;
      } else if (s == best) {
        row.llm_tie = true;
      }
    }
    run.matrix.rows.push_back(row);
  }
  run.records = std::move(records);
  return run;
}

}  // namespace prm::promptlab
