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

#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "prm/app.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

template <typename T>
void assign(std::optional<T>& dst, const T& value, bool given) {
  if (given) dst = value;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace prm;
  auto logger = spdlog::stderr_color_mt("prm");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);

  CLI::App cli{"Camera-to-LLM consultation pipeline driven by a YAML task file"};
  cli.require_subcommand(1);
  bool verbose = false;
  cli.add_flag("-v,--verbose", verbose, "Log at debug level");

  // validate
  std::string validate_path;
  auto* validate = cli.add_subcommand("validate", "Check a task file");
  validate->add_option("config", validate_path, "Task YAML")->required();

  // run
  app::RunOptions run;
  std::string config_path, backend, backend_url, mock_script, llm_stub, llm_endpoint, api_key,
      frames_dir, session_log, annotate_dir, sink_jsonl, record, bus_listen, bus_connect,
      backlog;
  std::uint64_t frame_budget = 0;
  std::uint32_t frame_interval = 1;
  double sample_seconds = 0;
  int backend_retries = 1;
  long backend_timeout_ms = 30000;
  long drain_ms = 5000;
  auto* runc = cli.add_subcommand("run", "Run the camera and consultation nodes");
  runc->add_option("config", config_path, "Task YAML")->required();
  auto* o_backend = runc->add_option("--backend", backend, "Override the description method (e.g. mock)");
  auto* o_backend_url = runc->add_option("--backend-url", backend_url, "Vision backend base URL");
  auto* o_mock = runc->add_option("--mock-script", mock_script, "Script for the mock backend");
  auto* o_retries = runc->add_option("--backend-retries", backend_retries, "Retries per describe call");
  auto* o_btimeout = runc->add_option("--backend-timeout-ms", backend_timeout_ms, "Describe timeout");
  auto* o_stub = runc->add_option("--llm-stub", llm_stub, "Offline LLM script");
  auto* o_llm = runc->add_option("--llm-endpoint", llm_endpoint, "LLM base URL");
  auto* o_key = runc->add_option("--api-key", api_key, "LLM API key (default: $ROSGPT_API_KEY)");
  auto* o_frames = runc->add_option("--frames", frames_dir, "Read frames from this directory");
  auto* o_budget = runc->add_option("--frame-budget", frame_budget, "Stop after this many frames");
  auto* o_interval = runc->add_option("--frame-interval", frame_interval, "Describe every f-th frame");
  auto* o_seconds = runc->add_option("--sample-seconds", sample_seconds, "Describe every t seconds of stream time");
  o_interval->excludes(o_seconds);
  auto* o_backlog = runc->add_option("--backlog", backlog, "latest or fifo")
                        ->check(CLI::IsMember({"latest", "fifo"}));
  runc->add_option("--drain-ms", drain_ms, "Wait for outstanding consultations at the end");
  auto* o_log = runc->add_option("--log", session_log, "Session log (JSONL); default Output_video");
  auto* o_annotate = runc->add_option("--annotate", annotate_dir, "Write annotated frames here");
  auto* o_sink = runc->add_option("--consultations", sink_jsonl, "Append consultations to a JSONL file");
  runc->add_flag("--echo", run.echo_consultations, "Print consultations as they arrive");
  auto* o_record = runc->add_option("--record", record, "Record both topics to this file");
  auto* o_listen = runc->add_option("--bus-listen", bus_listen, "Host the bus and the consultation node");
  auto* o_connect = runc->add_option("--bus-connect", bus_connect, "Run the camera node against a remote bus");
  o_listen->excludes(o_connect);

  // replay
  app::ReplayOptions replay;
  std::string replay_config, replay_stub;
  auto* replayc = cli.add_subcommand("replay", "Republish a recorded session");
  replayc->add_option("recording", replay.recording, "Recording JSONL")->required();
  auto* o_rconfig = replayc->add_option("--config", replay_config, "Re-run consultation with this task");
  auto* o_rstub = replayc->add_option("--llm-stub", replay_stub, "Offline LLM script for the re-run");

  // promptlab
  app::PromptlabOptions lab;
  std::string lab_out, lab_records, lab_backend, lab_url, lab_mock, lab_stub, lab_llm, lab_key;
  auto* labc = cli.add_subcommand("promptlab", "Prompt-strategy evaluation");
  labc->require_subcommand(1);
  auto* lab_run = labc->add_subcommand("run", "Run the strategy matrix, score and render");
  lab_run->add_option("--cases", lab.cases, "Cases YAML")->required();
  lab_run->add_option("--rubric", lab.rubric, "Rubric TSV")->required();
  auto* l_out = lab_run->add_option("--out", lab_out, "Table output (default stdout)");
  auto* l_records = lab_run->add_option("--records", lab_records, "Records JSONL");
  auto* l_backend = lab_run->add_option("--backend", lab_backend, "Description method");
  auto* l_url = lab_run->add_option("--backend-url", lab_url, "Vision backend base URL");
  auto* l_mock = lab_run->add_option("--mock-script", lab_mock, "Script for the mock backend");
  auto* l_stub = lab_run->add_option("--llm-stub", lab_stub, "Offline LLM script");
  auto* l_llm = lab_run->add_option("--llm-endpoint", lab_llm, "LLM base URL");
  auto* l_key = lab_run->add_option("--api-key", lab_key, "LLM API key");
  lab_run->add_option("--parallelism", lab.parallelism, "Concurrent cells")
      ->check(CLI::PositiveNumber);

  // tap
  app::TapOptions tap;
  std::uint64_t tap_count = 0;
  long tap_timeout_ms = 10000;
  auto* tapc = cli.add_subcommand("tap", "Print envelopes of one topic on a remote bus");
  tapc->add_option("--bus-connect", tap.bus_connect, "Bus address")->required();
  tapc->add_option("--topic", tap.topic, "Topic name")->required();
  auto* t_count = tapc->add_option("--count", tap_count, "Exit after this many envelopes");
  tapc->add_option("--timeout-ms", tap_timeout_ms, "Give up after this long");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kExitIo;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  if (*validate) return app::cmd_validate(validate_path, std::cout, std::cerr);

  if (*runc) {
    run.config_path = config_path;
    assign(run.backend_method, backend, o_backend->count() > 0);
    assign(run.backend_url, backend_url, o_backend_url->count() > 0);
    if (*o_mock) run.mock_script = mock_script;
    assign(run.backend_retries, backend_retries, o_retries->count() > 0);
    if (*o_btimeout) run.backend_timeout = std::chrono::milliseconds(backend_timeout_ms);
    if (*o_stub) run.llm_stub = llm_stub;
    assign(run.llm_endpoint, llm_endpoint, o_llm->count() > 0);
    assign(run.api_key, api_key, o_key->count() > 0);
    if (*o_frames) run.frames_dir = frames_dir;
    assign(run.frame_budget, frame_budget, o_budget->count() > 0);
    assign(run.frame_interval, frame_interval, o_interval->count() > 0);
    assign(run.sample_seconds, sample_seconds, o_seconds->count() > 0);
    if (*o_backlog) {
      run.backlog = backlog == "fifo" ? consultation::BacklogPolicy::fifo
                                      : consultation::BacklogPolicy::latest_only;
    }
    run.drain_timeout = std::chrono::milliseconds(drain_ms);
    if (*o_log) run.session_log = session_log;
    if (*o_annotate) run.annotate_dir = annotate_dir;
    if (*o_sink) run.consultations_jsonl = sink_jsonl;
    if (*o_record) run.record = record;
    assign(run.bus_listen, bus_listen, o_listen->count() > 0);
    assign(run.bus_connect, bus_connect, o_connect->count() > 0);
    run.stop = &g_stop;
    return app::cmd_run(run, std::cout, std::cerr);
  }

  if (*replayc) {
    if (*o_rconfig) replay.config_path = replay_config;
    if (*o_rstub) replay.llm_stub = replay_stub;
    return app::cmd_replay(replay, std::cout, std::cerr);
  }

  if (*lab_run) {
    if (*l_out) lab.out = lab_out;
    if (*l_records) lab.records = lab_records;
    assign(lab.backend_method, lab_backend, l_backend->count() > 0);
    assign(lab.backend_url, lab_url, l_url->count() > 0);
    if (*l_mock) lab.mock_script = lab_mock;
    if (*l_stub) lab.llm_stub = lab_stub;
    assign(lab.llm_endpoint, lab_llm, l_llm->count() > 0);
    assign(lab.api_key, lab_key, l_key->count() > 0);
    return app::cmd_promptlab(lab, std::cout, std::cerr);
  }

  if (*tapc) {
    if (*t_count) tap.count = tap_count;
    tap.timeout = std::chrono::milliseconds(tap_timeout_ms);
    return app::cmd_tap(tap, std::cout, std::cerr);
  }
  return app::kExitIo;
}
