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

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prm {

/// Root of every exception thrown by this project.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or stream I/O failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Backend failures shared by the image-semantics clients and the LLM client.
class BackendError : public Error {
 public:
  using Error::Error;
};

class BackendTimeout : public BackendError {
 public:
  using BackendError::BackendError;
};

class BackendProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Nanoseconds. Inside envelopes this is the monotonic clock; for frames
/// read from a finite source it is stream time since the first frame.
using Timestamp = std::chrono::nanoseconds;

Timestamp monotonic_now();

/// UTC wall-clock time as ISO-8601 with millisecond precision.
std::string wall_clock_iso8601();

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

/// Lower-case, zero-padded, 16 hex digits.
std::string hex64(std::uint64_t value);

std::string base64_encode(std::string_view bytes);

/// Throws prm::Error on characters outside the standard alphabet or bad padding.
std::string base64_decode(std::string_view text);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace prm
