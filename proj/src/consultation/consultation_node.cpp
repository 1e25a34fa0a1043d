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

#include <spdlog/spdlog.h>

#include "prm/consultation.hpp"

namespace prm::consultation {

namespace {

constexpr std::size_t kFifoDepth = std::size_t{1} << 20;

bus::Subscription subscribe_descriptions(bus::Endpoint& bus, BacklogPolicy policy) {
  const auto topic = bus.ensure_topic(bus::kImageDescriptionTopic, bus::kDefaultQueueDepth);
  bus::SubscribeOptions options;
  options.queue_depth = policy == BacklogPolicy::latest_only ? 1 : kFifoDepth;
  return bus.subscribe(topic, std::move(options));
}

}  // namespace

ConsultationNode::ConsultationNode(config::TaskConfig config, LlmClient& client,
                                   bus::Endpoint& bus, ConsultationOptions options)
    : config_(std::move(config)),
      client_(client),
      bus_(bus),
      options_(std::move(options)),
      consultation_topic_(bus.ensure_topic(bus::kConsultationTopic, bus::kDefaultQueueDepth)),
      descriptions_(subscribe_descriptions(bus, options_.backlog)) {}

bool ConsultationNode::handle(const bus::MessageEnvelope& envelope, ConsultationReport& report) {
  ++report.descriptions_seen;
  ImageDescription description;
  try {
    description = decode_description(envelope.payload);
  } catch (const MessageFormatError& e) {
    ++report.errors;
    spdlog::warn("undecodable description seq {}: {}", envelope.seq, e.what());
    return false;
  }
  if (last_index_ && description.frame_index <= *last_index_) {
    ++report.duplicates;
    return false;
  }
  LlmRequest request;
  try {
    request = build_llm_request(config_.consultation.llm_prompt, description,
                                config_.consultation.gpt_temperature);
  } catch (const SkipSignal&) {
    ++report.skipped_empty;
    return false;
  }
  const auto start = std::chrono::steady_clock::now();
  std::string text;
  try {
    text = ask_llm(client_, request);
  } catch (const BackendError& e) {
    ++report.errors;
    spdlog::warn("frame {}: consultation failed: {}", description.frame_index, e.what());
    return false;
  }
  Consultation consultation{description.frame_index, std::move(text), client_.model_tag(),
                            request.temperature, std::chrono::steady_clock::now() - start};
  last_index_ = description.frame_index;
  bus_.publish(consultation_topic_, encode(consultation));
  ++report.consultations_published;
  report.published_indices.push_back(consultation.frame_index);
  for (auto* sink : options_.sinks) sink->deliver(consultation);
  return true;
}

ConsultationReport ConsultationNode::run() {
  ConsultationReport report;
  while (!(options_.stop && options_.stop->load())) {
    auto envelope = descriptions_.next(std::chrono::milliseconds(20));
    if (!envelope) {
      if (!descriptions_.active() && descriptions_.pending() == 0) break;
      continue;
    }
    handle(*envelope, report);
  }
  report.dropped_backlog = descriptions_.dropped();
  return report;
}

ConsultationReport run_consultation_node(const config::TaskConfig& config, LlmClient& client,
                                         bus::Endpoint& bus, ConsultationOptions options) {
  ConsultationNode node(config, client, bus, std::move(options));
  return node.run();
}

}  // namespace prm::consultation
