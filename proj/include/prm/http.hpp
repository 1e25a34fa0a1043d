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

// Minimal JSON-over-HTTP POST shared by the backend and LLM clients.

#include <chrono>
#include <map>
#include <string>
#include <string_view>

#include "prm/common.hpp"

namespace prm::http {

struct Url {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // without trailing slash, may be empty
};

/// Throws BackendUnavailable for anything that is not http://host[:port][/path].
Url parse_url(std::string_view text);

struct Response {
  int status = 0;
  std::string body;
};

/// One POST attempt. Throws BackendTimeout when the request exceeds
/// `timeout` and BackendUnavailable when the server cannot be reached.
/// Non-2xx statuses are returned, not thrown.
Response post_json(const Url& url, std::string_view path, const std::string& body,
                   std::chrono::milliseconds timeout,
                   const std::map<std::string, std::string>& headers = {});

}  // namespace prm::http
