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

// Length-prefixed JSON framing: a 4-byte big-endian body length followed by a
// UTF-8 JSON object. Envelope bodies carry the fields topic, seq,
// publish_time and payload (base64).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "prm/bus.hpp"

namespace prm::bus::wire {

inline constexpr std::size_t kHeaderBytes = 4;
inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

std::string encode_frame(std::string_view body);

/// Incremental decoder for a byte stream. Throws ProtocolError on a zero or
/// oversized length prefix; the stream is unusable afterwards.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_frame_bytes = kMaxFrameBytes)
      : max_frame_bytes_(max_frame_bytes) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }
  std::optional<std::string> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::size_t max_frame_bytes_;
  std::string buffer_;
};

nlohmann::json envelope_to_json(const MessageEnvelope& envelope);
/// Throws ProtocolError when a field is missing or mistyped.
MessageEnvelope envelope_from_json(const nlohmann::json& body);

/// Full frame (header + body) for one envelope.
std::string serialize_envelope(const MessageEnvelope& envelope);
/// Inverse of serialize_envelope; the input must be exactly one frame.
MessageEnvelope parse_envelope(std::string_view frame);

/// Parses a frame body as a JSON object. Throws ProtocolError.
nlohmann::json parse_body(std::string_view body);

}  // namespace prm::bus::wire
