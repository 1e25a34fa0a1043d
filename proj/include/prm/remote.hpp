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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "prm/bus.hpp"

namespace prm::bus {

/// `tcp://host:port`, `host:port`, or `unix:/path/to/socket`.
struct Address {
  enum class Kind { tcp, unix_socket };

  Kind kind = Kind::tcp;
  std::string host;
  std::uint16_t port = 0;
  std::string path;

  /// Throws TransportError on a malformed address.
  static Address parse(std::string_view text);
  std::string to_string() const;
};

/// Exposes a LocalBus to other processes over the framed JSON protocol.
/// Each client connection gets a reader thread and a writer thread; a
/// connection that sends a malformed frame is dropped without affecting
/// the bus or other clients.
class BusServer {
 public:
  /// Binds and starts accepting. Throws TransportError on bind failure and
  /// BusError if `bus` is already served.
  BusServer(LocalBus& bus, const Address& address);
  ~BusServer();
  BusServer(const BusServer&) = delete;
  BusServer& operator=(const BusServer&) = delete;

  /// The bound address; for tcp port 0 this carries the assigned port.
  const Address& address() const { return address_; }

  void stop();

  std::size_t active_connections() const;
  std::size_t total_connections() const;
  std::uint64_t protocol_errors() const { return protocol_errors_.load(); }

  /// Blocks until at least one client has connected and all clients have
  /// since disconnected, or the timeout expires. Returns true in the former case.
  bool wait_until_idle_after_use(std::chrono::milliseconds timeout);

 private:
  class Connection;

  void accept_loop();
  void reap_finished();

  LocalBus& bus_;
  Address address_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> protocol_errors_{0};
  std::thread accept_thread_;

  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::list<std::unique_ptr<Connection>> connections_;
  std::size_t total_connections_ = 0;
};

/// A client session on a remote bus; implements the same Endpoint surface.
class RemoteBus final : public Endpoint {
 public:
  struct Options {
    /// How long to keep retrying the initial connect.
    std::chrono::milliseconds connect_timeout{0};
    std::chrono::milliseconds request_timeout{10000};
  };

  /// Throws TransportError when the server cannot be reached.
  static std::unique_ptr<RemoteBus> connect(const Address& address, Options options);
  static std::unique_ptr<RemoteBus> connect(const Address& address) {
    return connect(address, Options{});
  }

  ~RemoteBus() override;
  RemoteBus(const RemoteBus&) = delete;
  RemoteBus& operator=(const RemoteBus&) = delete;

  TopicHandle create_topic(const TopicName& name, std::size_t depth) override;
  TopicHandle find_topic(const TopicName& name) override;
  std::uint64_t publish(const TopicHandle& topic, std::string payload) override;
  Subscription subscribe(const TopicHandle& topic, SubscribeOptions options = {}) override;
  std::optional<MessageEnvelope> latest(const TopicHandle& topic) override;

  bool connected() const;
  void close();

 private:
  struct Core;
  explicit RemoteBus(std::shared_ptr<Core> core);

  std::shared_ptr<Core> core_;
  std::thread reader_;
};

}  // namespace prm::bus
