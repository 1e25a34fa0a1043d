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

// In-process HTTP server for backend and LLM client tests.

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

namespace prm::testing {

struct StubReply {
  int status = 200;
  std::string body;
  std::chrono::milliseconds delay{0};
};

/// Serves POST on the given paths with a scripted handler. Every request body
/// and Authorization header is kept.
class StubServer {
 public:
  using Script = std::function<StubReply(int call, const std::string& path,
                                         const std::string& body)>;

  explicit StubServer(Script script) : script_(std::move(script)) {
    for (const char* path : {"/describe", "/segment", "/chat"}) {
      server_.Post(path, [this, path](const httplib::Request& req, httplib::Response& res) {
        int call = 0;
        {
          std::lock_guard lock(mu_);
          call = static_cast<int>(bodies_.size());
          bodies_.push_back(req.body);
          auth_.push_back(req.get_header_value("Authorization"));
        }
        const auto reply = script_(call, path, req.body);
        if (reply.delay.count() > 0) std::this_thread::sleep_for(reply.delay);
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
      });
    }
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const {
    std::lock_guard lock(mu_);
    return static_cast<int>(bodies_.size());
  }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mu_);
    return auth_;
  }

 private:
  Script script_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
};

inline std::string text_reply(const std::string& text) {
  return std::string("{\"text\":\"") + text + "\"}";
}

}  // namespace prm::testing
