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
#include <stdexcept>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prm/http.hpp"
#include "prm/semantics.hpp"

namespace prm::semantics {

namespace {

using nlohmann::json;

enum class FailureKind { timeout, unavailable, protocol };

// Runs `attempt` up to retries+1 times. Timeouts, unreachable servers and 5xx
// replies are retried; anything else is thrown at once. When attempts run
// out the last failure is rethrown.
template <typename Attempt>
json post_with_retries(const BackendSpec& spec, std::string_view path, const json& request,
                       Attempt&& decode) {
  if (!spec.endpoint) throw BackendUnavailable("backend has no endpoint");
  const auto url = http::parse_url(*spec.endpoint);
  const auto body = request.dump();
  const int attempts = std::max(spec.retries, 0) + 1;
  FailureKind last_kind = FailureKind::unavailable;
  std::string last_message;
  for (int i = 0; i < attempts; ++i) {
    try {
      const auto response = http::post_json(url, path, body, spec.timeout);
      if (response.status >= 500) {
        last_kind = FailureKind::protocol;
        last_message = "backend returned HTTP " + std::to_string(response.status);
        continue;
      }
      if (response.status < 200 || response.status >= 300) {
        throw BackendProtocolError("backend returned HTTP " + std::to_string(response.status));
      }
      auto parsed = json::parse(response.body, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        throw BackendProtocolError("backend response is not a JSON object");
      }
      return decode(parsed);
    } catch (const BackendTimeout& e) {
      last_kind = FailureKind::timeout;
      last_message = e.what();
    } catch (const BackendUnavailable& e) {
      last_kind = FailureKind::unavailable;
      last_message = e.what();
    }
    if (i + 1 < attempts) spdlog::debug("retrying backend call: {}", last_message);
  }
  switch (last_kind) {
    case FailureKind::timeout: throw BackendTimeout(last_message);
    case FailureKind::protocol: throw BackendProtocolError(last_message);
    case FailureKind::unavailable: break;
  }
  throw BackendUnavailable("retries exhausted: " + last_message);
}

json image_fields(const Frame& frame) {
  json j{{"image_b64", base64_encode(frame.data)},
         {"image_format", std::string(to_string(frame.format))}};
  if (frame.format == PixelFormat::rgb8) {
    j["width"] = frame.width;
    j["height"] = frame.height;
  }
  return j;
}

}  // namespace

HttpDescribeBackend::HttpDescribeBackend(BackendSpec spec) : spec_(std::move(spec)) {
  if (spec_.id != BackendId::llava && spec_.id != BackendId::minigpt4) {
    throw std::invalid_argument("HttpDescribeBackend serves llava and minigpt4 only");
  }
  if (!spec_.endpoint) throw std::invalid_argument("HTTP backend requires an endpoint");
}

std::string HttpDescribeBackend::model_tag() const {
  if (spec_.id == BackendId::llava) {
    return "llava-" + spec_.params.llama_version.value_or("13B");
  }
  return "minigpt4";
}

DescribeRequest HttpDescribeBackend::make_request(const Frame& frame,
                                                  std::string_view vision_prompt) const {
  return DescribeRequest{spec_.id, std::string(vision_prompt), frame.data, frame.format,
                         spec_.params.temperature.value_or(0.0)};
}

DescribeResponse HttpDescribeBackend::describe(const Frame& frame,
                                               std::string_view vision_prompt) {
  if (vision_prompt.empty()) throw std::invalid_argument("vision prompt must not be empty");
  const auto request = make_request(frame, vision_prompt);
  auto body = image_fields(frame);
  body["prompt"] = request.vision_prompt;
  body["temperature"] = request.temperature;
  body["model"] = model_tag();
  if (spec_.id == BackendId::minigpt4 && spec_.params.configuration) {
    body["configuration"] = *spec_.params.configuration;
  }
  const auto start = std::chrono::steady_clock::now();
  auto text = post_with_retries(spec_, "/describe", body, [](const json& reply) {
    auto it = reply.find("text");
    if (it == reply.end() || !it->is_string()) {
      throw BackendProtocolError("describe response lacks a text field");
    }
    if (it->get_ref<const std::string&>().empty()) {
      throw BackendProtocolError("describe response text is empty");
    }
    return *it;
  });
  DescribeResponse response;
  response.text = text.get<std::string>();
  response.latency = std::chrono::steady_clock::now() - start;
  response.model_tag = model_tag();
  return response;
}

SamBackend::SamBackend(BackendSpec spec) : spec_(std::move(spec)) {
  if (spec_.id != BackendId::sam) throw std::invalid_argument("SamBackend requires id sam");
  if (!spec_.endpoint) throw std::invalid_argument("SAM backend requires an endpoint");
}

MaskSummary SamBackend::segment(const Frame& frame, std::string_view prompt) {
  auto body = image_fields(frame);
  body["prompt"] = std::string(prompt);
  if (spec_.params.weights) body["weights"] = *spec_.params.weights;
  auto masks = post_with_retries(spec_, "/segment", body, [](const json& reply) {
    auto it = reply.find("masks");
    if (it == reply.end() || !it->is_array()) {
      throw BackendProtocolError("segment response lacks a masks array");
    }
    return *it;
  });
  MaskSummary summary;
  for (const auto& m : masks) {
    if (!m.is_object() || !m.contains("area_fraction") || !m["area_fraction"].is_number()) {
      throw BackendProtocolError("mask without a numeric area_fraction");
    }
    MaskInfo info;
    info.area_fraction = m["area_fraction"].get<double>();
    if (!(info.area_fraction >= 0.0 && info.area_fraction <= 1.0)) {
      throw BackendProtocolError("mask area_fraction outside [0, 1]");
    }
    if (auto label = m.find("label"); label != m.end() && label->is_string()) {
      info.label = label->get<std::string>();
    }
    summary.masks.push_back(std::move(info));
  }
  if (summary.masks.empty()) {
    throw BackendProtocolError("segmentation returned no masks; expected at least one");
  }
  return summary;
}

DescribeResponse SamBackend::describe(const Frame& frame, std::string_view vision_prompt) {
  if (vision_prompt.empty()) throw std::invalid_argument("vision prompt must not be empty");
  const auto start = std::chrono::steady_clock::now();
  const auto summary = segment(frame, vision_prompt);
  DescribeResponse response;
  response.text = render_mask_summary(summary);
  response.latency = std::chrono::steady_clock::now() - start;
  response.model_tag = "sam";
  return response;
}

}  // namespace prm::semantics
