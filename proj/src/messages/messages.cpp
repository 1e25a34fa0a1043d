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

#include "prm/messages.hpp"

#include <json.hpp>

namespace prm {

using nlohmann::json;

std::string_view to_string(PixelFormat format) {
  switch (format) {
    case PixelFormat::rgb8: return "rgb8";
    case PixelFormat::png_bytes: return "png";
    case PixelFormat::jpeg_bytes: return "jpeg";
  }
  return "unknown";
}

bool frame_consistent(const Frame& frame) {
  if (frame.width == 0 || frame.height == 0) return false;
  if (frame.format == PixelFormat::rgb8) {
    return frame.data.size() == std::size_t{frame.width} * frame.height * 3;
  }
  return !frame.data.empty();
}

namespace {

json parse_object(std::string_view payload, std::string_view what) {
  auto j = json::parse(payload, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw MessageFormatError(std::string(what) + ": payload is not a JSON object");
  }
  return j;
}

template <typename T>
T field(const json& j, const char* name, std::string_view what) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw MessageFormatError(std::string(what) + ": missing field " + name);
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw MessageFormatError(std::string(what) + ": bad type for field " + name);
  }
}

}  // namespace

std::string encode(const ImageDescription& d) {
  return json{{"task_name", d.task_name},
              {"frame_index", d.frame_index},
              {"capture_time", d.capture_time.count()},
              {"text", d.text},
              {"backend_id", d.backend_id},
              {"vision_prompt_digest", hex64(d.vision_prompt_digest)}}
      .dump();
}

std::string encode(const Consultation& c) {
  return json{{"frame_index", c.frame_index},
              {"text", c.text},
              {"model_tag", c.model_tag},
              {"temperature", c.temperature},
              {"elapsed", c.elapsed.count()}}
      .dump();
}

ImageDescription decode_description(std::string_view payload) {
  constexpr std::string_view kWhat = "ImageDescription";
  const auto j = parse_object(payload, kWhat);
  ImageDescription d;
  d.task_name = field<std::string>(j, "task_name", kWhat);
  d.frame_index = field<std::uint64_t>(j, "frame_index", kWhat);
  d.capture_time = Timestamp(field<std::int64_t>(j, "capture_time", kWhat));
  d.text = field<std::string>(j, "text", kWhat);
  d.backend_id = field<std::string>(j, "backend_id", kWhat);
  const auto digest = field<std::string>(j, "vision_prompt_digest", kWhat);
  try {
    std::size_t used = 0;
    d.vision_prompt_digest = std::stoull(digest, &used, 16);
    if (used != digest.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw MessageFormatError("ImageDescription: bad vision_prompt_digest");
  }
  return d;
}

Consultation decode_consultation(std::string_view payload) {
  constexpr std::string_view kWhat = "Consultation";
  const auto j = parse_object(payload, kWhat);
  Consultation c;
  c.frame_index = field<std::uint64_t>(j, "frame_index", kWhat);
  c.text = field<std::string>(j, "text", kWhat);
  c.model_tag = field<std::string>(j, "model_tag", kWhat);
  c.temperature = field<double>(j, "temperature", kWhat);
  c.elapsed = std::chrono::nanoseconds(field<std::int64_t>(j, "elapsed", kWhat));
  return c;
}

}  // namespace prm
