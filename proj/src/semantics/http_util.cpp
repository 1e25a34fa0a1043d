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

#include <httplib.h>

#include "prm/http.hpp"

namespace prm::http {

Url parse_url(std::string_view text) {
  const auto scheme_end = text.find("://");
  if (scheme_end == std::string_view::npos) {
    throw BackendUnavailable("endpoint is not a URL: " + std::string(text));
  }
  const auto scheme = text.substr(0, scheme_end);
  if (scheme != "http") {
    throw BackendUnavailable("unsupported URL scheme (only http): " + std::string(scheme));
  }
  const auto rest = text.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  Url url;
  url.origin = std::string(text.substr(0, scheme_end + 3)) + std::string(rest.substr(0, slash));
  if (slash == std::string_view::npos || slash == 0) {
    if (slash == 0) throw BackendUnavailable("URL without host: " + std::string(text));
    return url;
  }
  std::string path(rest.substr(slash));
  while (!path.empty() && path.back() == '/') path.pop_back();
  url.base_path = path;
  return url;
}

Response post_json(const Url& url, std::string_view path, const std::string& body,
                   std::chrono::milliseconds timeout,
                   const std::map<std::string, std::string>& headers) {
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_keep_alive(false);

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  const auto start = std::chrono::steady_clock::now();
  auto result = client.Post(url.base_path + std::string(path), h, body, "application/json");
  if (!result) {
    const auto err = result.error();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    // httplib reports read timeouts as generic read errors; elapsed time
    // tells them apart from resets.
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                            elapsed >= timeout * 9 / 10);
    const auto what = url.origin + url.base_path + std::string(path) + ": " +
                      httplib::to_string(err);
    if (timed_out) throw BackendTimeout("request timed out: " + what);
    throw BackendUnavailable("request failed: " + what);
  }
  return Response{result->status, result->body};
}

}  // namespace prm::http
