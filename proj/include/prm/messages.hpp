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

// Payload types carried on the two pipeline topics, plus the Frame handed
// from frame sources to image-semantics backends.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "prm/common.hpp"

namespace prm {

enum class PixelFormat { rgb8, png_bytes, jpeg_bytes };

std::string_view to_string(PixelFormat format);

struct Frame {
  std::uint64_t index = 0;  // position in the source stream
  Timestamp capture_time{0};
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  PixelFormat format = PixelFormat::rgb8;
  std::string data;
  std::string source_id;
  /// Fixture label (e.g. from labels.tsv); keys the scripted mock backend.
  std::optional<std::string> label;
};

/// Checks width/height are positive and, for rgb8, that data holds
/// width*height*3 bytes.
bool frame_consistent(const Frame& frame);

/// Payload of the Image_Description topic.
struct ImageDescription {
  std::string task_name;
  std::uint64_t frame_index = 0;
  Timestamp capture_time{0};
  std::string text;
  std::string backend_id;
  std::uint64_t vision_prompt_digest = 0;

  bool operator==(const ImageDescription&) const = default;
};

/// Payload of the GPT_Consultation topic.
struct Consultation {
  std::uint64_t frame_index = 0;
  std::string text;
  std::string model_tag;
  double temperature = 0.0;
  std::chrono::nanoseconds elapsed{0};

  bool operator==(const Consultation&) const = default;
};

class MessageFormatError : public Error {
 public:
  using Error::Error;
};

std::string encode(const ImageDescription& description);
std::string encode(const Consultation& consultation);
/// Throw MessageFormatError.
ImageDescription decode_description(std::string_view payload);
Consultation decode_consultation(std::string_view payload);

}  // namespace prm
