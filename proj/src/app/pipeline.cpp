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

#include <cstdlib>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "prm/app.hpp"
#include "prm/remote.hpp"
#include "prm/session.hpp"

namespace prm::app {

namespace fs = std::filesystem;

namespace {

struct Setup {
  config::TaskConfig config;
  fs::path base_dir;
  camera::SamplingPolicy policy;
  consultation::BacklogPolicy backlog = consultation::BacklogPolicy::latest_only;
};

Setup load_setup(const RunOptions& o) {
  Setup s;
  auto parsed = config::load_task_config(o.config_path);
  for (const auto& w : parsed.warnings) spdlog::warn("unknown config key {}", w);
  s.config = std::move(parsed.config);
  s.base_dir = o.config_path.parent_path();

  if (o.backend_method) {
    const auto method = config::parse_description_method(*o.backend_method);
    if (!method) throw UsageError("unknown backend '" + *o.backend_method + "'");
    s.config.camera.method = *method;
  }
  if (o.mock_script) {
    s.config.mock = config::MockParams{fs::absolute(*o.mock_script).string()};
  }
  if (o.frames_dir) {
    s.config.camera.choose_input = config::InputKind::frames;
    s.config.camera.input_video = fs::absolute(*o.frames_dir).string();
  }
  const auto violations = config::validate(s.config);
  if (!violations.empty()) {
    std::string msg = "invalid task configuration:";
    for (const auto& v : violations) msg += "\n  " + v.path + ": " + v.message;
    throw config::ConfigError(violations.front().path, msg);
  }

  if (o.frame_interval && o.sample_seconds) {
    throw UsageError("--frame-interval and --sample-seconds are exclusive");
  }
  try {
    if (o.sample_seconds) {
      s.policy = camera::SamplingPolicy::every_seconds(*o.sample_seconds);
    } else {
      s.policy = camera::SamplingPolicy::every_frames(o.frame_interval.value_or(1));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  s.backlog = o.backlog.value_or(s.config.camera.choose_input == config::InputKind::webcam
                                     ? consultation::BacklogPolicy::latest_only
                                     : consultation::BacklogPolicy::fifo);
  return s;
}

std::unique_ptr<consultation::LlmClient> make_llm(const RunOptions& o) {
  if (o.llm_stub) {
    return std::make_unique<consultation::StubLlmClient>(
        consultation::StubLlmClient::load(*o.llm_stub));
  }
  if (!o.llm_endpoint) throw UsageError("no LLM configured; pass --llm-stub or --llm-endpoint");
  consultation::HttpLlmClient::Options http;
  http.endpoint = *o.llm_endpoint;
  if (o.api_key) {
    http.api_key = *o.api_key;
  } else if (const char* env = std::getenv(std::string(consultation::kApiKeyEnv).c_str())) {
    http.api_key = env;
  }
  return std::make_unique<consultation::HttpLlmClient>(std::move(http));
}

std::unique_ptr<semantics::Backend> make_describer(const Setup& s, const RunOptions& o) {
  auto spec = semantics::build_backend(s.config, o.backend_url, s.base_dir);
  if (o.backend_retries) spec.retries = *o.backend_retries;
  if (o.backend_timeout) spec.timeout = *o.backend_timeout;
  return semantics::make_backend(spec);
}

camera::CameraOptions camera_options(const Setup& s, const RunOptions& o) {
  camera::CameraOptions c;
  c.policy = s.policy;
  c.frame_budget = o.frame_budget;
  c.stop = o.stop;
  c.drain_timeout = o.drain_timeout;
  c.session_log = o.session_log;
  if (!c.session_log && s.config.camera.output_video && !s.config.camera.output_video->empty()) {
    fs::path p(*s.config.camera.output_video);
    c.session_log = p.is_relative() ? s.base_dir / p : p;
  }
  c.annotate_dir = o.annotate_dir;
  return c;
}

struct ConsultationHost {
  std::unique_ptr<consultation::LlmClient> llm;
  std::vector<std::unique_ptr<consultation::Sink>> sinks;
  std::unique_ptr<consultation::ConsultationNode> node;
  std::atomic<bool> stop{false};
  std::thread thread;
  consultation::ConsultationReport report;

  void start(const Setup& s, const RunOptions& o, bus::Endpoint& bus, std::ostream& out) {
    llm = make_llm(o);
    consultation::ConsultationOptions options;
    options.backlog = s.backlog;
    options.stop = &stop;
    if (o.echo_consultations) sinks.push_back(std::make_unique<consultation::ConsoleSink>(out));
    if (o.consultations_jsonl) {
      sinks.push_back(std::make_unique<consultation::JsonlSink>(*o.consultations_jsonl));
    }
    for (auto& sink : sinks) options.sinks.push_back(sink.get());
    node = std::make_unique<consultation::ConsultationNode>(s.config, *llm, bus, options);
    thread = std::thread([this] { report = node->run(); });
  }

  consultation::ConsultationReport finish() {
    stop = true;
    if (thread.joinable()) thread.join();
    return report;
  }

  ~ConsultationHost() { finish(); }
};

void save_recording(const session::SessionRecorder& recorder, const Setup& s,
                    const std::string& start_time, const fs::path& path) {
  session::RecordingHeader header{s.config.task_name, config::digest(s.config), start_time};
  session::write_recording(path, recorder.snapshot(header));
}

}  // namespace

std::string format_report(const camera::CameraReport& r) {
  std::ostringstream out;
  out << "camera: frames_read=" << r.frames_read << " frames_sampled=" << r.frames_sampled
      << " descriptions_published=" << r.descriptions_published
      << " backend_errors=" << r.backend_errors
      << " consultations_received=" << r.consultations_received;
  if (r.source_error) out << " source_error=\"" << *r.source_error << '"';
  return out.str();
}

std::string format_report(const consultation::ConsultationReport& r) {
  std::ostringstream out;
  out << "consultation: descriptions_seen=" << r.descriptions_seen
      << " consultations_published=" << r.consultations_published << " errors=" << r.errors
      << " dropped=" << r.dropped_backlog << " skipped=" << r.skipped_empty;
  return out.str();
}

PipelineResult run_pipeline(const RunOptions& o, std::ostream& out) {
  if (o.bus_listen && o.bus_connect) throw UsageError("--bus-listen and --bus-connect are exclusive");
  const auto setup = load_setup(o);
  const auto start_time = wall_clock_iso8601();
  PipelineResult result;

  if (o.bus_connect) {
    if (o.record) throw UsageError("--record belongs to the process given --bus-listen");
    auto describer = make_describer(setup, o);
    auto source = camera::open_source(setup.config.camera, setup.base_dir);
    bus::RemoteBus::Options ro;
    ro.connect_timeout = o.connect_timeout;
    auto remote = bus::RemoteBus::connect(bus::Address::parse(*o.bus_connect), ro);
    result.camera =
        camera::run_camera_node(setup.config, *source, *describer, *remote, camera_options(setup, o));
    remote->close();
    return result;
  }

  bus::LocalBus bus;
  bus.create_topic(bus::kImageDescriptionTopic, bus::kDefaultQueueDepth);
  bus.create_topic(bus::kConsultationTopic, bus::kDefaultQueueDepth);
  std::optional<session::SessionRecorder> recorder;
  if (o.record) {
    recorder.emplace(bus, std::vector<bus::TopicName>{bus::kImageDescriptionTopic,
                                                       bus::kConsultationTopic});
  }

  if (o.bus_listen) {
    bus::BusServer server(bus, bus::Address::parse(*o.bus_listen));
    ConsultationHost host;
    host.start(setup, o, bus, out);
    out << "bus listening on " << server.address().to_string() << std::endl;
    while (!(o.stop && o.stop->load())) {
      if (server.wait_until_idle_after_use(std::chrono::milliseconds(100))) break;
    }
    result.consultation = host.finish();
    server.stop();
  } else {
    auto describer = make_describer(setup, o);
    auto source = camera::open_source(setup.config.camera, setup.base_dir);
    ConsultationHost host;
    host.start(setup, o, bus, out);
    result.camera =
        camera::run_camera_node(setup.config, *source, *describer, bus, camera_options(setup, o));
    result.consultation = host.finish();
  }

  if (recorder) {
    recorder->stop();
    save_recording(*recorder, setup, start_time, *o.record);
  }
  return result;
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto result = run_pipeline(options, out);
    int code = kExitOk;
    if (result.camera) {
      out << format_report(*result.camera) << '\n';
      if (result.camera->source_error) code = kExitDomain;
      if (result.camera->log_error) {
        err << "session log: " << *result.camera->log_error << '\n';
        if (code == kExitOk) code = kExitIo;
      }
    }
    if (result.consultation) out << format_report(*result.consultation) << '\n';
    return code;
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const bus::TransportError& e) {
    err << "bus: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace prm::app
