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

#include <algorithm>

#include "prm/bus.hpp"

namespace prm::bus {

TopicName::TopicName(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw BusError("topic name must not be empty");
}

namespace detail {

SubscriberQueue::SubscriberQueue(std::string topic, std::size_t depth, MessageHandler handler)
    : topic_(std::move(topic)), depth_(std::max<std::size_t>(depth, 1)),
      handler_(std::move(handler)) {}

void SubscriberQueue::push(const MessageEnvelope& envelope) {
  if (handler_) {
    {
      std::lock_guard lock(mu_);
      if (closed_) return;
    }
    handler_(envelope);
    return;
  }
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (items_.size() >= depth_) {
      items_.pop_front();
      ++dropped_;
    }
    items_.push_back(envelope);
  }
  cv_.notify_one();
}

std::optional<MessageEnvelope> SubscriberQueue::pop(
    std::optional<std::chrono::milliseconds> timeout) {
  std::unique_lock lock(mu_);
  if (timeout) {
    cv_.wait_for(lock, *timeout, [&] { return !items_.empty() || closed_; });
  }
  if (items_.empty()) return std::nullopt;
  auto envelope = std::move(items_.front());
  items_.pop_front();
  return envelope;
}

void SubscriberQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool SubscriberQueue::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::uint64_t SubscriberQueue::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

std::size_t SubscriberQueue::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

}  // namespace detail

Subscription::Subscription(std::shared_ptr<detail::SubscriberQueue> queue,
                           std::function<void()> detach)
    : queue_(std::move(queue)), detach_(std::move(detach)) {}

Subscription::Subscription(Subscription&& other) noexcept
    : queue_(std::move(other.queue_)), detach_(std::move(other.detach_)) {
  other.detach_ = nullptr;
}

Subscription& Subscription::operator=(Subscription&& other) noexcept {
  if (this != &other) {
    unsubscribe();
    queue_ = std::move(other.queue_);
    detach_ = std::move(other.detach_);
    other.detach_ = nullptr;
  }
  return *this;
}

Subscription::~Subscription() { unsubscribe(); }

std::optional<MessageEnvelope> Subscription::next(std::chrono::milliseconds timeout) {
  if (!queue_) return std::nullopt;
  return queue_->pop(timeout);
}

std::optional<MessageEnvelope> Subscription::try_next() {
  if (!queue_) return std::nullopt;
  return queue_->pop(std::nullopt);
}

std::uint64_t Subscription::dropped() const { return queue_ ? queue_->dropped() : 0; }

std::size_t Subscription::pending() const { return queue_ ? queue_->size() : 0; }

bool Subscription::active() const { return queue_ && !queue_->closed(); }

const std::string& Subscription::topic() const {
  static const std::string kNone;
  return queue_ ? queue_->topic() : kNone;
}

void Subscription::unsubscribe() {
  if (detach_) {
    auto detach = std::move(detach_);
    detach_ = nullptr;
    detach();
  }
  if (queue_) queue_->close();
}

TopicHandle Endpoint::ensure_topic(const TopicName& name, std::size_t depth) {
  try {
    return find_topic(name);
  } catch (const UnknownTopic&) {
  }
  try {
    return create_topic(name, depth);
  } catch (const DuplicateTopic&) {
    return find_topic(name);
  }
}

struct LocalBus::Topic {
  explicit Topic(std::size_t d) : depth(d) {}

  std::mutex mu;
  const std::size_t depth;
  std::uint64_t next_seq = 0;
  std::optional<MessageEnvelope> latest;
  std::deque<MessageEnvelope> history;
  std::vector<std::shared_ptr<detail::SubscriberQueue>> subscribers;
};

TopicHandle LocalBus::create_topic(const TopicName& name, std::size_t depth) {
  if (depth == 0) throw BusError("topic depth must be positive: " + name.str());
  std::unique_lock lock(mu_);
  if (topics_.contains(name.str())) throw DuplicateTopic("duplicate topic: " + name.str());
  topics_.emplace(name.str(), std::make_shared<Topic>(depth));
  return TopicHandle(name);
}

TopicHandle LocalBus::find_topic(const TopicName& name) {
  std::shared_lock lock(mu_);
  if (!topics_.contains(name.str())) throw UnknownTopic("unknown topic: " + name.str());
  return TopicHandle(name);
}

std::shared_ptr<LocalBus::Topic> LocalBus::lookup(const TopicHandle& topic) const {
  std::shared_lock lock(mu_);
  auto it = topics_.find(topic.name().str());
  if (it == topics_.end()) throw UnknownTopic("unknown topic: " + topic.name().str());
  return it->second;
}

std::uint64_t LocalBus::publish(const TopicHandle& topic, std::string payload) {
  auto state = lookup(topic);
  std::lock_guard lock(state->mu);
  MessageEnvelope envelope{topic.name().str(), state->next_seq++, monotonic_now().count(),
                           std::move(payload)};
  state->history.push_back(envelope);
  while (state->history.size() > state->depth) state->history.pop_front();
  for (const auto& sub : state->subscribers) sub->push(envelope);
  const auto seq = envelope.seq;
  state->latest = std::move(envelope);
  return seq;
}

void LocalBus::republish(const TopicHandle& topic, const MessageEnvelope& original) {
  auto state = lookup(topic);
  std::lock_guard lock(state->mu);
  if (original.seq < state->next_seq) {
    throw BusError("republish of seq " + std::to_string(original.seq) + " on " +
                   topic.name().str() + " would reorder the topic");
  }
  MessageEnvelope envelope{topic.name().str(), original.seq, original.publish_time,
                           original.payload};
  state->next_seq = original.seq + 1;
  state->history.push_back(envelope);
  while (state->history.size() > state->depth) state->history.pop_front();
  for (const auto& sub : state->subscribers) sub->push(envelope);
  state->latest = std::move(envelope);
}

Subscription LocalBus::subscribe(const TopicHandle& topic, SubscribeOptions options) {
  auto state = lookup(topic);
  auto queue = std::make_shared<detail::SubscriberQueue>(
      topic.name().str(), options.queue_depth, std::move(options.handler));
  {
    std::lock_guard lock(state->mu);
    if (state->latest) queue->push(*state->latest);
    state->subscribers.push_back(queue);
  }
  std::weak_ptr<Topic> weak_state = state;
  std::weak_ptr<detail::SubscriberQueue> weak_queue = queue;
  auto detach = [weak_state, weak_queue] {
    auto s = weak_state.lock();
    auto q = weak_queue.lock();
    if (!s || !q) return;
    std::lock_guard lock(s->mu);
    std::erase(s->subscribers, q);
  };
  return Subscription(std::move(queue), std::move(detach));
}

std::optional<MessageEnvelope> LocalBus::latest(const TopicHandle& topic) {
  auto state = lookup(topic);
  std::lock_guard lock(state->mu);
  return state->latest;
}

std::vector<MessageEnvelope> LocalBus::history(const TopicHandle& topic) {
  auto state = lookup(topic);
  std::lock_guard lock(state->mu);
  return {state->history.begin(), state->history.end()};
}

std::size_t LocalBus::depth(const TopicHandle& topic) { return lookup(topic)->depth; }

std::size_t LocalBus::subscriber_count(const TopicHandle& topic) {
  auto state = lookup(topic);
  std::lock_guard lock(state->mu);
  return state->subscribers.size();
}

std::vector<std::string> LocalBus::topic_names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> names;
  for (const auto& [name, _] : topics_) names.push_back(name);
  return names;
}

void LocalBus::mark_served() {
  std::unique_lock lock(mu_);
  if (served_) throw BusError("bus is already being served");
  served_ = true;
}

}  // namespace prm::bus
