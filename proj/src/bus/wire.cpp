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

#include "prm/wire.hpp"

namespace prm::bus::wire {

std::string encode_frame(std::string_view body) {
  if (body.size() > kMaxFrameBytes) throw ProtocolError("frame body too large");
  const auto len = static_cast<std::uint32_t>(body.size());
  std::string frame;
  frame.reserve(kHeaderBytes + body.size());
  frame.push_back(static_cast<char>((len >> 24) & 0xff));
  frame.push_back(static_cast<char>((len >> 16) & 0xff));
  frame.push_back(static_cast<char>((len >> 8) & 0xff));
  frame.push_back(static_cast<char>(len & 0xff));
  frame.append(body);
  return frame;
}

std::optional<std::string> FrameDecoder::next() {
  if (buffer_.size() < kHeaderBytes) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data());
  const std::uint32_t len = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                            (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  if (len == 0) throw ProtocolError("zero-length frame");
  if (len > max_frame_bytes_) {
    throw ProtocolError("frame of " + std::to_string(len) + " bytes exceeds limit");
  }
  if (buffer_.size() < kHeaderBytes + len) return std::nullopt;
  std::string body = buffer_.substr(kHeaderBytes, len);
  buffer_.erase(0, kHeaderBytes + len);
  return body;
}

nlohmann::json envelope_to_json(const MessageEnvelope& envelope) {
  return nlohmann::json{{"topic", envelope.topic},
                        {"seq", envelope.seq},
                        {"publish_time", envelope.publish_time},
                        {"payload", base64_encode(envelope.payload)}};
}

MessageEnvelope envelope_from_json(const nlohmann::json& body) {
  if (!body.is_object()) throw ProtocolError("envelope is not a JSON object");
  const auto field = [&](const char* name) -> const nlohmann::json& {
    auto it = body.find(name);
    if (it == body.end()) throw ProtocolError(std::string("envelope missing field ") + name);
    return *it;
  };
  const auto& topic = field("topic");
  const auto& seq = field("seq");
  const auto& publish_time = field("publish_time");
  const auto& payload = field("payload");
  if (!topic.is_string() || topic.get_ref<const std::string&>().empty()) {
    throw ProtocolError("envelope topic must be a non-empty string");
  }
  if (!seq.is_number_unsigned()) throw ProtocolError("envelope seq must be unsigned");
  if (!publish_time.is_number_integer()) {
    throw ProtocolError("envelope publish_time must be an integer");
  }
  if (!payload.is_string()) throw ProtocolError("envelope payload must be a string");
  MessageEnvelope envelope;
  envelope.topic = topic.get<std::string>();
  envelope.seq = seq.get<std::uint64_t>();
  envelope.publish_time = publish_time.get<std::int64_t>();
  try {
    envelope.payload = base64_decode(payload.get_ref<const std::string&>());
  } catch (const Error& e) {
    throw ProtocolError(std::string("envelope payload: ") + e.what());
  }
  return envelope;
}

std::string serialize_envelope(const MessageEnvelope& envelope) {
  return encode_frame(envelope_to_json(envelope).dump());
}

MessageEnvelope parse_envelope(std::string_view frame) {
  FrameDecoder decoder;
  decoder.feed(frame);
  auto body = decoder.next();
  if (!body) throw ProtocolError("truncated frame");
  if (decoder.buffered() != 0) throw ProtocolError("trailing bytes after frame");
  return envelope_from_json(parse_body(*body));
}

nlohmann::json parse_body(std::string_view body) {
  auto parsed = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) throw ProtocolError("frame body is not valid JSON");
  if (!parsed.is_object()) throw ProtocolError("frame body is not a JSON object");
  return parsed;
}

}  // namespace prm::bus::wire
