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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "prm/common.hpp"

namespace prm::bus {

inline constexpr std::string_view kImageDescriptionTopic = "Image_Description";
inline constexpr std::string_view kConsultationTopic = "GPT_Consultation";

inline constexpr std::size_t kDefaultQueueDepth = 64;

class BusError : public Error {
 public:
  using Error::Error;
};

class DuplicateTopic : public BusError {
 public:
  using BusError::BusError;
};

class UnknownTopic : public BusError {
 public:
  using BusError::BusError;
};

class TransportError : public BusError {
 public:
  using BusError::BusError;
};

class ProtocolError : public BusError {
 public:
  using BusError::BusError;
};

/// Non-empty topic name.
class TopicName {
 public:
  explicit TopicName(std::string name);
  TopicName(std::string_view name) : TopicName(std::string(name)) {}
  TopicName(const char* name) : TopicName(std::string(name)) {}

  const std::string& str() const { return name_; }
  auto operator<=>(const TopicName&) const = default;

 private:
  std::string name_;
};

struct MessageEnvelope {
  std::string topic;
  std::uint64_t seq = 0;
  std::int64_t publish_time = 0;  // monotonic nanoseconds
  std::string payload;            // opaque bytes

  bool operator==(const MessageEnvelope&) const = default;
};

/// Identifies a registered topic on a particular endpoint.
class TopicHandle {
 public:
  explicit TopicHandle(TopicName name) : name_(std::move(name)) {}
  const TopicName& name() const { return name_; }
  bool operator==(const TopicHandle&) const = default;

 private:
  TopicName name_;
};

using MessageHandler = std::function<void(const MessageEnvelope&)>;

struct SubscribeOptions {
  /// Capacity of the pull queue. Overflow drops the oldest envelope.
  std::size_t queue_depth = kDefaultQueueDepth;
  /// When set, envelopes are handed to this callback on the delivery path
  /// instead of being queued. The callback must not block and must not
  /// publish to the topic it is subscribed to.
  MessageHandler handler;
};

namespace detail {

// Bounded drop-oldest queue shared between a Subscription and its producer.
class SubscriberQueue {
 public:
  SubscriberQueue(std::string topic, std::size_t depth, MessageHandler handler);

  void push(const MessageEnvelope& envelope);
  std::optional<MessageEnvelope> pop(std::optional<std::chrono::milliseconds> timeout);
  void close();

  bool closed() const;
  std::uint64_t dropped() const;
  std::size_t size() const;
  const std::string& topic() const { return topic_; }

 private:
  const std::string topic_;
  const std::size_t depth_;
  MessageHandler handler_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<MessageEnvelope> items_;
  std::uint64_t dropped_ = 0;
  bool closed_ = false;
};

}  // namespace detail

/// Receives envelopes from one topic in seq order. Move-only; unsubscribes on
/// destruction.
class Subscription {
 public:
  Subscription() = default;
  Subscription(std::shared_ptr<detail::SubscriberQueue> queue, std::function<void()> detach);
  Subscription(Subscription&& other) noexcept;
  Subscription& operator=(Subscription&& other) noexcept;
  Subscription(const Subscription&) = delete;
  Subscription& operator=(const Subscription&) = delete;
  ~Subscription();

  /// Blocks up to `timeout`. Returns nothing on timeout or once unsubscribed
  /// and drained.
  std::optional<MessageEnvelope> next(std::chrono::milliseconds timeout);
  std::optional<MessageEnvelope> try_next();

  /// Envelopes discarded because the queue was full.
  std::uint64_t dropped() const;
  std::size_t pending() const;
  bool active() const;
  const std::string& topic() const;

  void unsubscribe();

 private:
  std::shared_ptr<detail::SubscriberQueue> queue_;
  std::function<void()> detach_;
};

/// Publish/subscribe surface shared by the in-process bus and remote sessions.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual TopicHandle create_topic(const TopicName& name, std::size_t depth) = 0;
  /// Throws UnknownTopic.
  virtual TopicHandle find_topic(const TopicName& name) = 0;
  virtual std::uint64_t publish(const TopicHandle& topic, std::string payload) = 0;
  /// Latched: the current latest envelope, if any, is delivered immediately.
  virtual Subscription subscribe(const TopicHandle& topic, SubscribeOptions options = {}) = 0;
  virtual std::optional<MessageEnvelope> latest(const TopicHandle& topic) = 0;

  /// find_topic, or create_topic when absent.
  TopicHandle ensure_topic(const TopicName& name, std::size_t depth);
};

/// In-process bus. All operations are safe under concurrent callers.
class LocalBus final : public Endpoint {
 public:
  LocalBus() = default;
  LocalBus(const LocalBus&) = delete;
  LocalBus& operator=(const LocalBus&) = delete;

  TopicHandle create_topic(const TopicName& name, std::size_t depth) override;
  TopicHandle find_topic(const TopicName& name) override;
  std::uint64_t publish(const TopicHandle& topic, std::string payload) override;
  Subscription subscribe(const TopicHandle& topic, SubscribeOptions options = {}) override;
  std::optional<MessageEnvelope> latest(const TopicHandle& topic) override;

  /// Delivers a previously recorded envelope keeping its seq and publish
  /// time. Throws BusError if the seq is not beyond the topic's last one.
  void republish(const TopicHandle& topic, const MessageEnvelope& envelope);

  /// Oldest first, at most `depth` entries.
  std::vector<MessageEnvelope> history(const TopicHandle& topic);
  std::size_t depth(const TopicHandle& topic);
  std::size_t subscriber_count(const TopicHandle& topic);
  std::vector<std::string> topic_names() const;

  /// Claims the bus for a server. A bus may be served at most once.
  void mark_served();

 private:
  struct Topic;
  std::shared_ptr<Topic> lookup(const TopicHandle& topic) const;

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Topic>, std::less<>> topics_;
  bool served_ = false;
};

}  // namespace prm::bus
