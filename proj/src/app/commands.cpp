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
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "prm/app.hpp"
#include "prm/promptlab.hpp"
#include "prm/remote.hpp"
#include "prm/session.hpp"
#include "prm/wire.hpp"

namespace prm::app {

namespace fs = std::filesystem;

int cmd_validate(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  config::ParseResult parsed;
  try {
    parsed = config::load_task_config(config_path);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const config::ConfigError& e) {
    err << config_path.string() << ": " << e.what() << '\n';
    return kExitDomain;
  }
  for (const auto& w : parsed.warnings) err << "warning: unknown key " << w << '\n';
  const auto violations = config::validate(parsed.config);
  for (const auto& v : violations) out << v.path << ": " << v.message << '\n';
  if (!violations.empty()) return kExitDomain;
  out << config_path.string() << ": ok (task \"" << parsed.config.task_name << "\", digest "
      << hex64(config::digest(parsed.config)) << ")\n";
  return kExitOk;
}

namespace {

// Re-runs the consultation node on the recorded descriptions and compares
// with the recorded consultations.
int verify_consultations(const session::Recording& recording, const ReplayOptions& o,
                         std::ostream& out, std::ostream& err) {
  auto parsed = config::load_task_config(*o.config_path);
  auto llm = consultation::StubLlmClient::load(*o.llm_stub);

  bus::LocalBus bus;
  const auto desc_topic = bus.create_topic(bus::kImageDescriptionTopic, bus::kDefaultQueueDepth);
  const auto cons_topic = bus.create_topic(bus::kConsultationTopic, bus::kDefaultQueueDepth);
  (void)desc_topic;
  bus::SubscribeOptions big;
  big.queue_depth = std::size_t{1} << 20;
  auto observed = bus.subscribe(cons_topic, big);

  std::atomic<bool> stop{false};
  consultation::ConsultationOptions options;
  options.backlog = consultation::BacklogPolicy::fifo;
  options.stop = &stop;
  consultation::ConsultationNode node(parsed.config, llm, bus, options);
  consultation::ConsultationReport report;
  std::thread worker([&] { report = node.run(); });

  session::replay(recording, bus, session::ReplayOptions{{std::string(bus::kImageDescriptionTopic)}});

  const auto expected = recording.topic(bus::kConsultationTopic);
  std::vector<Consultation> got;
  const auto deadline = std::chrono::steady_clock::now() + o.settle_timeout;
  while (got.size() < expected.size() && std::chrono::steady_clock::now() < deadline) {
    if (auto env = observed.next(std::chrono::milliseconds(50))) {
      got.push_back(decode_consultation(env->payload));
    }
  }
  // Anything beyond the recorded count is also a mismatch.
  while (auto env = observed.next(std::chrono::milliseconds(100))) {
    got.push_back(decode_consultation(env->payload));
  }
  stop = true;
  worker.join();

  bool match = got.size() == expected.size();
  for (std::size_t i = 0; match && i < got.size(); ++i) {
    const auto want = decode_consultation(expected[i].payload);
    match = want.frame_index == got[i].frame_index && want.text == got[i].text;
    if (!match) {
      err << "consultation " << i << " differs: recorded frame " << want.frame_index << " \""
          << want.text << "\", replayed frame " << got[i].frame_index << " \"" << got[i].text
          << "\"\n";
    }
  }
  out << "replay: re-ran consultation on " << report.descriptions_seen << " descriptions, "
      << got.size() << " consultations, recorded " << expected.size() << ": "
      << (match ? "match" : "MISMATCH") << '\n';
  return match ? kExitOk : kExitDomain;
}

}  // namespace

int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  if (o.config_path.has_value() != o.llm_stub.has_value()) {
    err << "usage: --config and --llm-stub go together\n";
    return kExitIo;
  }
  session::Recording recording;
  try {
    recording = session::read_recording(o.recording);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const session::RecordingError& e) {
    err << o.recording.string() << ": corrupt entry at " << e.what() << '\n';
    return kExitDomain;
  }

  try {
    if (o.config_path) {
      const auto audit = session::audit_causality(recording);
      for (const auto& v : audit.violations) err << "causality: " << v << '\n';
      const int code = verify_consultations(recording, o, out, err);
      return audit.ok() ? code : kExitDomain;
    }

    // Plain replay: republish everything and check what subscribers saw.
    bus::LocalBus bus;
    std::map<std::string, bus::Subscription> subs;
    std::map<std::string, std::vector<bus::MessageEnvelope>> seen;
    for (const auto& e : recording.entries) {
      if (subs.count(e.envelope.topic)) continue;
      const auto topic =
          bus.ensure_topic(bus::TopicName(e.envelope.topic), bus::kDefaultQueueDepth);
      bus::SubscribeOptions opts;
      const std::string name = e.envelope.topic;
      opts.handler = [&seen, name](const bus::MessageEnvelope& env) { seen[name].push_back(env); };
      subs.emplace(name, bus.subscribe(topic, std::move(opts)));
    }
    const auto published = session::replay(recording, bus);
    bool faithful = true;
    for (const auto& [topic, sub] : subs) {
      const auto want = recording.topic(topic);
      const auto& got = seen[topic];
      const bool same = want == got;
      faithful = faithful && same;
      out << "topic " << topic << ": " << got.size() << " envelopes"
          << (same ? "" : " (differs from recording)") << '\n';
    }
    const auto audit = session::audit_causality(recording);
    for (const auto& v : audit.violations) err << "causality: " << v << '\n';
    out << "replayed " << published << " envelopes; causality "
        << (audit.ok() ? "ok" : "violated") << '\n';
    return faithful && audit.ok() ? kExitOk : kExitDomain;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

int cmd_promptlab(const PromptlabOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto cases = promptlab::load_cases(o.cases);
    const auto rubric = promptlab::load_rubric(o.rubric);

    semantics::BackendSpec spec;
    const std::string method = o.backend_method.value_or(o.mock_script ? "mock" : "");
    if (method.empty()) {
      err << "usage: pass --mock-script or --backend\n";
      return kExitIo;
    }
    const auto parsed_method = config::parse_description_method(method);
    if (!parsed_method) {
      err << "usage: unknown backend '" << method << "'\n";
      return kExitIo;
    }
    spec.id = semantics::backend_id_for(*parsed_method);
    if (spec.id == semantics::BackendId::mock) {
      if (!o.mock_script) {
        err << "usage: the mock backend needs --mock-script\n";
        return kExitIo;
      }
      spec.script = std::make_shared<const semantics::MockScript>(
          semantics::MockScript::load(*o.mock_script));
    } else {
      const char* env = std::getenv(std::string(semantics::kBackendUrlEnv).c_str());
      spec.endpoint = o.backend_url ? *o.backend_url
                                    : (env && *env ? std::string(env)
                                                   : std::string(semantics::kDefaultEndpoint));
    }
    auto backend = semantics::make_backend(spec);

    std::unique_ptr<consultation::LlmClient> llm;
    if (o.llm_stub) {
      llm = std::make_unique<consultation::StubLlmClient>(
          consultation::StubLlmClient::load(*o.llm_stub));
    } else if (o.llm_endpoint) {
      consultation::HttpLlmClient::Options http;
      http.endpoint = *o.llm_endpoint;
      if (o.api_key) {
        http.api_key = *o.api_key;
      } else if (const char* key = std::getenv(std::string(consultation::kApiKeyEnv).c_str())) {
        http.api_key = key;
      }
      llm = std::make_unique<consultation::HttpLlmClient>(std::move(http));
    } else {
      err << "usage: pass --llm-stub or --llm-endpoint\n";
      return kExitIo;
    }

    promptlab::MatrixOptions matrix_options;
    matrix_options.parallelism = o.parallelism;
    auto records = promptlab::run_matrix(cases.cases, cases.strategies, *backend, *llm,
                                         matrix_options);
    std::size_t errors = 0;
    for (const auto& r : records) errors += r.error ? 1 : 0;
    auto scored = promptlab::score_records(std::move(records), rubric);
    const auto text = promptlab::render_table(scored.matrix) + "\n" +
                      promptlab::render_tallies(promptlab::summarize(scored.matrix));
    if (o.out) {
      std::ofstream f(*o.out, std::ios::binary | std::ios::trunc);
      if (!(f << text)) throw IoError("cannot write " + o.out->string());
    } else {
      out << text;
    }
    if (o.records) promptlab::write_records(*o.records, scored.records);
    err << "promptlab: " << scored.records.size() << " records, " << errors << " errors\n";
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

int cmd_tap(const TapOptions& o, std::ostream& out, std::ostream& err) {
  try {
    bus::RemoteBus::Options ro;
    ro.connect_timeout = std::chrono::milliseconds(5000);
    auto remote = bus::RemoteBus::connect(bus::Address::parse(o.bus_connect), ro);
    const auto topic = remote->ensure_topic(bus::TopicName(o.topic), bus::kDefaultQueueDepth);
    bus::SubscribeOptions opts;
    opts.queue_depth = std::size_t{1} << 20;
    auto sub = remote->subscribe(topic, opts);
    out << "ready" << std::endl;
    std::uint64_t n = 0;
    const auto deadline = std::chrono::steady_clock::now() + o.timeout;
    while (!o.count || n < *o.count) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) break;
      auto env = sub.next(left);
      if (!env) {
        if (!sub.active()) break;
        continue;
      }
      out << bus::wire::envelope_to_json(*env).dump() << '\n';
      ++n;
    }
    out.flush();
    remote->close();
    if (o.count && n < *o.count) {
      err << "tap: received " << n << " of " << *o.count << " envelopes\n";
      return kExitDomain;
    }
    return kExitOk;
  } catch (const bus::TransportError& e) {
    err << "bus: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace prm::app
