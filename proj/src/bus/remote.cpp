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

#include "prm/remote.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <deque>
#include <future>

#include <spdlog/spdlog.h>

#include "prm/wire.hpp"

namespace prm::bus {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxOutboundFrames = 1u << 16;
constexpr std::size_t kReadChunk = 64 * 1024;

std::string errno_text() { return std::strerror(errno); }

void send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("send failed: " + errno_text());
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Returns 0 on orderly shutdown, -1 on error.
ssize_t recv_some(int fd, char* buf, std::size_t len) {
  for (;;) {
    const ssize_t n = ::recv(fd, buf, len, 0);
    if (n < 0 && errno == EINTR) continue;
    return n;
  }
}

sockaddr_un unix_address(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.empty() || path.size() >= sizeof(addr.sun_path)) {
    throw TransportError("unix socket path is empty or too long: " + path);
  }
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

struct AddrInfoDeleter {
  void operator()(addrinfo* p) const { ::freeaddrinfo(p); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const Address& address, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* result = nullptr;
  const auto port = std::to_string(address.port);
  const int rc = ::getaddrinfo(address.host.empty() ? nullptr : address.host.c_str(),
                               port.c_str(), &hints, &result);
  if (rc != 0) {
    throw TransportError("cannot resolve " + address.to_string() + ": " + ::gai_strerror(rc));
  }
  return std::unique_ptr<addrinfo, AddrInfoDeleter>(result);
}

// Returns a connected fd or -1; never throws for refused connections.
int try_connect(const Address& address) {
  if (address.kind == Address::Kind::unix_socket) {
    const auto addr = unix_address(address.path);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) return -1;
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      return -1;
    }
    return fd;
  }
  auto info = resolve(address, false);
  for (addrinfo* ai = info.get(); ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return fd;
    }
    ::close(fd);
  }
  return -1;
}

int listen_on(Address& address) {
  if (address.kind == Address::Kind::unix_socket) {
    const auto addr = unix_address(address.path);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw TransportError("socket: " + errno_text());
    ::unlink(address.path.c_str());
    if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd, 64) != 0) {
      const auto err = errno_text();
      ::close(fd);
      throw TransportError("cannot listen on " + address.to_string() + ": " + err);
    }
    return fd;
  }
  auto info = resolve(address, true);
  std::string last_error = "no usable address";
  for (addrinfo* ai = info.get(); ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      sockaddr_storage bound{};
      socklen_t len = sizeof(bound);
      if (::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len) == 0) {
        if (bound.ss_family == AF_INET) {
          address.port = ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
        } else if (bound.ss_family == AF_INET6) {
          address.port = ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port);
        }
      }
      return fd;
    }
    last_error = errno_text();
    ::close(fd);
  }
  throw TransportError("cannot listen on " + address.to_string() + ": " + last_error);
}

json error_reply(const json& id, std::string_view kind, std::string_view message) {
  return json{{"op", "error"}, {"id", id}, {"kind", kind}, {"message", message}};
}

[[noreturn]] void rethrow_remote_error(const json& reply) {
  const auto kind = reply.value("kind", std::string("BusError"));
  const auto message = reply.value("message", std::string("remote error"));
  if (kind == "DuplicateTopic") throw DuplicateTopic(message);
  if (kind == "UnknownTopic") throw UnknownTopic(message);
  if (kind == "TransportError") throw TransportError(message);
  if (kind == "ProtocolError") throw ProtocolError(message);
  throw BusError(message);
}

}  // namespace

Address Address::parse(std::string_view text) {
  Address address;
  if (text.starts_with("unix:")) {
    text.remove_prefix(5);
    if (text.starts_with("//")) text.remove_prefix(2);
    if (text.empty()) throw TransportError("unix address without a path");
    address.kind = Kind::unix_socket;
    address.path = std::string(text);
    return address;
  }
  if (text.starts_with("tcp://")) text.remove_prefix(6);
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw TransportError("address needs host:port: " + std::string(text));
  }
  auto host = text.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port > 65535) {
    throw TransportError("invalid port in address: " + std::string(port_text));
  }
  address.kind = Kind::tcp;
  address.host = host.empty() ? "127.0.0.1" : std::string(host);
  address.port = static_cast<std::uint16_t>(port);
  return address;
}

std::string Address::to_string() const {
  if (kind == Kind::unix_socket) return "unix:" + path;
  if (host.find(':') != std::string::npos) {
    return "tcp://[" + host + "]:" + std::to_string(port);
  }
  return "tcp://" + host + ":" + std::to_string(port);
}

// ---------------------------------------------------------------------------
// Server side

class BusServer::Connection {
 public:
  Connection(BusServer& server, int fd) : server_(server), fd_(fd) {
    writer_ = std::thread([this] { write_loop(); });
    reader_ = std::thread([this] { read_loop(); });
  }

  ~Connection() {
    ::shutdown(fd_, SHUT_RDWR);
    if (reader_.joinable()) reader_.join();
    if (writer_.joinable()) writer_.join();
    ::close(fd_);
  }

  void interrupt() { ::shutdown(fd_, SHUT_RDWR); }
  bool finished() const { return finished_.load(); }

 private:
  void enqueue(std::string frame, bool droppable) {
    {
      std::lock_guard lock(out_mu_);
      if (out_closed_) return;
      if (droppable && droppable_count_ >= kMaxOutboundFrames) {
        for (auto it = out_.begin(); it != out_.end(); ++it) {
          if (it->second) {
            out_.erase(it);
            --droppable_count_;
            break;
          }
        }
      }
      out_.emplace_back(std::move(frame), droppable);
      if (droppable) ++droppable_count_;
    }
    out_cv_.notify_one();
  }

  void protocol_failure(std::string_view what) {
    ++server_.protocol_errors_;
    spdlog::warn("bus server: dropping client after protocol error: {}", what);
    reply(error_reply(nullptr, "ProtocolError", what));
  }

  void reply(const json& body) { enqueue(wire::encode_frame(body.dump()), false); }

  void write_loop() {
    for (;;) {
      std::string frame;
      {
        std::unique_lock lock(out_mu_);
        out_cv_.wait(lock, [&] { return !out_.empty() || out_closed_; });
        if (out_.empty()) return;
        frame = std::move(out_.front().first);
        if (out_.front().second) --droppable_count_;
        out_.pop_front();
      }
      try {
        send_all(fd_, frame);
      } catch (const TransportError&) {
        ::shutdown(fd_, SHUT_RDWR);
        std::lock_guard lock(out_mu_);
        out_closed_ = true;
        out_.clear();
        return;
      }
    }
  }

  void read_loop() {
    wire::FrameDecoder decoder;
    std::string buf(kReadChunk, '\0');
    try {
      for (;;) {
        const ssize_t n = recv_some(fd_, buf.data(), buf.size());
        if (n <= 0) break;
        decoder.feed(std::string_view(buf.data(), static_cast<std::size_t>(n)));
        while (auto body = decoder.next()) handle(wire::parse_body(*body));
      }
    } catch (const ProtocolError& e) {
      protocol_failure(e.what());
    } catch (const nlohmann::json::exception& e) {
      protocol_failure(e.what());
    }
    subscriptions_.clear();
    // Let the writer flush what is queued, then stop it.
    {
      std::lock_guard lock(out_mu_);
      out_closed_ = true;
    }
    out_cv_.notify_all();
    if (writer_.joinable()) writer_.join();
    ::shutdown(fd_, SHUT_RDWR);
    finished_ = true;
    {
      std::lock_guard lock(server_.mu_);
    }
    server_.idle_cv_.notify_all();
  }

  void handle(const json& request) {
    const auto op_it = request.find("op");
    const auto id_it = request.find("id");
    if (op_it == request.end() || !op_it->is_string() || id_it == request.end() ||
        !id_it->is_number_unsigned()) {
      throw ProtocolError("request needs string op and unsigned id");
    }
    const auto& op = op_it->get_ref<const std::string&>();
    const json& id = *id_it;
    const auto topic_name = [&]() -> TopicName {
      auto it = request.find("topic");
      if (it == request.end() || !it->is_string()) throw ProtocolError(op + " needs a topic");
      return TopicName(it->get<std::string>());
    };
    try {
      if (op == "create") {
        const auto depth = request.value("depth", std::size_t{16});
        server_.bus_.create_topic(topic_name(), depth);
        reply({{"op", "ok"}, {"id", id}});
      } else if (op == "find") {
        server_.bus_.find_topic(topic_name());
        reply({{"op", "ok"}, {"id", id}});
      } else if (op == "publish") {
        auto it = request.find("payload");
        if (it == request.end() || !it->is_string()) throw ProtocolError("publish needs payload");
        std::string payload;
        try {
          payload = base64_decode(it->get_ref<const std::string&>());
        } catch (const Error& e) {
          throw ProtocolError(std::string("publish payload: ") + e.what());
        }
        const auto seq = server_.bus_.publish(TopicHandle(topic_name()), std::move(payload));
        reply({{"op", "ok"}, {"id", id}, {"seq", seq}});
      } else if (op == "subscribe") {
        auto sub_it = request.find("sub");
        if (sub_it == request.end() || !sub_it->is_number_unsigned()) {
          throw ProtocolError("subscribe needs an unsigned sub id");
        }
        const auto sub_id = sub_it->get<std::uint64_t>();
        SubscribeOptions options;
        options.handler = [this, sub_id](const MessageEnvelope& envelope) {
          auto body = wire::envelope_to_json(envelope);
          body["sub"] = sub_id;
          enqueue(wire::encode_frame(body.dump()), true);
        };
        auto subscription = server_.bus_.subscribe(TopicHandle(topic_name()), std::move(options));
        subscriptions_.insert_or_assign(sub_id, std::move(subscription));
        reply({{"op", "ok"}, {"id", id}});
      } else if (op == "unsubscribe") {
        subscriptions_.erase(request.value("sub", std::uint64_t{0}));
        reply({{"op", "ok"}, {"id", id}});
      } else if (op == "latest") {
        auto envelope = server_.bus_.latest(TopicHandle(topic_name()));
        reply({{"op", "ok"},
               {"id", id},
               {"envelope", envelope ? wire::envelope_to_json(*envelope) : json(nullptr)}});
      } else {
        reply(error_reply(id, "BusError", "unknown op: " + op));
      }
    } catch (const DuplicateTopic& e) {
      reply(error_reply(id, "DuplicateTopic", e.what()));
    } catch (const UnknownTopic& e) {
      reply(error_reply(id, "UnknownTopic", e.what()));
    } catch (const ProtocolError&) {
      throw;
    } catch (const BusError& e) {
      reply(error_reply(id, "BusError", e.what()));
    }
  }

  BusServer& server_;
  const int fd_;
  std::map<std::uint64_t, Subscription> subscriptions_;  // reader thread only

  std::mutex out_mu_;
  std::condition_variable out_cv_;
  std::deque<std::pair<std::string, bool>> out_;
  std::size_t droppable_count_ = 0;
  bool out_closed_ = false;

  std::atomic<bool> finished_{false};
  std::thread writer_;
  std::thread reader_;
};

BusServer::BusServer(LocalBus& bus, const Address& address) : bus_(bus), address_(address) {
  bus_.mark_served();
  listen_fd_ = listen_on(address_);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

BusServer::~BusServer() { stop(); }

void BusServer::stop() {
  if (stopping_.exchange(true)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  std::list<std::unique_ptr<Connection>> connections;
  {
    std::lock_guard lock(mu_);
    connections.swap(connections_);
  }
  for (auto& c : connections) c->interrupt();
  connections.clear();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  if (address_.kind == Address::Kind::unix_socket) ::unlink(address_.path.c_str());
  idle_cv_.notify_all();
}

void BusServer::accept_loop() {
  while (!stopping_.load()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 100);
    reap_finished();
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    if (address_.kind == Address::Kind::tcp) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }
    std::lock_guard lock(mu_);
    connections_.push_back(std::make_unique<Connection>(*this, fd));
    ++total_connections_;
  }
}

void BusServer::reap_finished() {
  std::list<std::unique_ptr<Connection>> done;
  {
    std::lock_guard lock(mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->finished()) {
        done.push_back(std::move(*it));
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }
  // Joined outside the lock.
  done.clear();
}

std::size_t BusServer::active_connections() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& c : connections_) n += c->finished() ? 0 : 1;
  return n;
}

std::size_t BusServer::total_connections() const {
  std::lock_guard lock(mu_);
  return total_connections_;
}

bool BusServer::wait_until_idle_after_use(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return idle_cv_.wait_for(lock, timeout, [&] {
    if (stopping_.load()) return true;
    if (total_connections_ == 0) return false;
    for (const auto& c : connections_) {
      if (!c->finished()) return false;
    }
    return true;
  });
}

// ---------------------------------------------------------------------------
// Client side

struct RemoteBus::Core {
  Core(int f, Options o) : fd(f), options(o) {}

  const int fd;
  const Options options;
  std::atomic<bool> closed{false};
  std::mutex write_mu;
  std::mutex mu;
  std::uint64_t next_id = 1;
  std::uint64_t next_sub = 1;
  std::map<std::uint64_t, std::promise<json>> pending;
  std::map<std::uint64_t, std::shared_ptr<detail::SubscriberQueue>> subs;

  void send(const json& body) {
    const auto frame = wire::encode_frame(body.dump());
    std::lock_guard lock(write_mu);
    if (closed.load()) throw TransportError("remote bus connection is closed");
    send_all(fd, frame);
  }

  json call(json request) {
    std::future<json> reply;
    std::uint64_t id = 0;
    {
      std::lock_guard lock(mu);
      if (closed.load()) throw TransportError("remote bus connection is closed");
      id = next_id++;
      reply = pending[id].get_future();
    }
    request["id"] = id;
    try {
      send(request);
    } catch (...) {
      std::lock_guard lock(mu);
      pending.erase(id);
      throw;
    }
    if (reply.wait_for(options.request_timeout) != std::future_status::ready) {
      std::lock_guard lock(mu);
      pending.erase(id);
      throw TransportError("remote bus request timed out");
    }
    auto result = reply.get();
    if (result.value("op", std::string()) == "error") rethrow_remote_error(result);
    return result;
  }

  void fail_all(const std::string& reason) {
    closed = true;
    std::map<std::uint64_t, std::promise<json>> pending_now;
    std::map<std::uint64_t, std::shared_ptr<detail::SubscriberQueue>> subs_now;
    {
      std::lock_guard lock(mu);
      pending_now.swap(pending);
      subs_now.swap(subs);
    }
    for (auto& [_, p] : pending_now) p.set_value(error_reply(nullptr, "TransportError", reason));
    for (auto& [_, q] : subs_now) q->close();
  }

  void dispatch(const json& body) {
    if (auto op = body.find("op"); op != body.end()) {
      if (!body.contains("id") || !body["id"].is_number_unsigned()) {
        if (op->is_string() && *op == "error") {
          throw ProtocolError(body.value("message", std::string("server reported an error")));
        }
        return;
      }
      std::lock_guard lock(mu);
      auto it = pending.find(body["id"].get<std::uint64_t>());
      if (it == pending.end()) return;  // fire-and-forget or timed-out request
      it->second.set_value(body);
      pending.erase(it);
      return;
    }
    auto sub_it = body.find("sub");
    if (sub_it == body.end() || !sub_it->is_number_unsigned()) {
      throw ProtocolError("delivery without a subscription id");
    }
    auto envelope = wire::envelope_from_json(body);
    std::shared_ptr<detail::SubscriberQueue> queue;
    {
      std::lock_guard lock(mu);
      auto it = subs.find(sub_it->get<std::uint64_t>());
      if (it != subs.end()) queue = it->second;
    }
    if (queue) queue->push(envelope);
  }

  void reader_loop() {
    wire::FrameDecoder decoder;
    std::string buf(kReadChunk, '\0');
    std::string reason = "connection closed by server";
    try {
      for (;;) {
        const ssize_t n = recv_some(fd, buf.data(), buf.size());
        if (n <= 0) break;
        decoder.feed(std::string_view(buf.data(), static_cast<std::size_t>(n)));
        while (auto body = decoder.next()) dispatch(wire::parse_body(*body));
      }
    } catch (const ProtocolError& e) {
      reason = std::string("protocol error: ") + e.what();
      spdlog::warn("remote bus: {}", reason);
    } catch (const nlohmann::json::exception& e) {
      reason = std::string("protocol error: ") + e.what();
      spdlog::warn("remote bus: {}", reason);
    }
    ::shutdown(fd, SHUT_RDWR);
    fail_all(reason);
  }
};

std::unique_ptr<RemoteBus> RemoteBus::connect(const Address& address, Options options) {
  const auto deadline = std::chrono::steady_clock::now() + options.connect_timeout;
  for (;;) {
    const int fd = try_connect(address);
    if (fd >= 0) {
      return std::unique_ptr<RemoteBus>(new RemoteBus(std::make_shared<Core>(fd, options)));
    }
    const auto err = errno_text();
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("cannot connect to " + address.to_string() + ": " + err);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

RemoteBus::RemoteBus(std::shared_ptr<Core> core) : core_(std::move(core)) {
  reader_ = std::thread([core = core_] { core->reader_loop(); });
}

RemoteBus::~RemoteBus() {
  close();
  ::close(core_->fd);
}

bool RemoteBus::connected() const { return !core_->closed.load(); }

void RemoteBus::close() {
  {
    std::lock_guard lock(core_->write_mu);
    ::shutdown(core_->fd, SHUT_RDWR);
  }
  if (reader_.joinable()) reader_.join();
}

TopicHandle RemoteBus::create_topic(const TopicName& name, std::size_t depth) {
  core_->call({{"op", "create"}, {"topic", name.str()}, {"depth", depth}});
  return TopicHandle(name);
}

TopicHandle RemoteBus::find_topic(const TopicName& name) {
  core_->call({{"op", "find"}, {"topic", name.str()}});
  return TopicHandle(name);
}

std::uint64_t RemoteBus::publish(const TopicHandle& topic, std::string payload) {
  auto reply = core_->call(
      {{"op", "publish"}, {"topic", topic.name().str()}, {"payload", base64_encode(payload)}});
  if (!reply.contains("seq") || !reply["seq"].is_number_unsigned()) {
    throw ProtocolError("publish reply without seq");
  }
  return reply["seq"].get<std::uint64_t>();
}

Subscription RemoteBus::subscribe(const TopicHandle& topic, SubscribeOptions options) {
  auto queue = std::make_shared<detail::SubscriberQueue>(
      topic.name().str(), options.queue_depth, std::move(options.handler));
  std::uint64_t sub_id = 0;
  {
    std::lock_guard lock(core_->mu);
    if (core_->closed.load()) throw TransportError("remote bus connection is closed");
    sub_id = core_->next_sub++;
    core_->subs.emplace(sub_id, queue);
  }
  try {
    core_->call({{"op", "subscribe"}, {"topic", topic.name().str()}, {"sub", sub_id}});
  } catch (...) {
    std::lock_guard lock(core_->mu);
    core_->subs.erase(sub_id);
    throw;
  }
  std::weak_ptr<Core> weak_core = core_;
  auto detach = [weak_core, sub_id] {
    auto core = weak_core.lock();
    if (!core) return;
    {
      std::lock_guard lock(core->mu);
      core->subs.erase(sub_id);
    }
    if (core->closed.load()) return;
    try {
      core->send({{"op", "unsubscribe"}, {"id", 0}, {"sub", sub_id}});
    } catch (const TransportError&) {
    }
  };
  return Subscription(std::move(queue), std::move(detach));
}

std::optional<MessageEnvelope> RemoteBus::latest(const TopicHandle& topic) {
  auto reply = core_->call({{"op", "latest"}, {"topic", topic.name().str()}});
  auto it = reply.find("envelope");
  if (it == reply.end() || it->is_null()) return std::nullopt;
  return wire::envelope_from_json(*it);
}

}  // namespace prm::bus
