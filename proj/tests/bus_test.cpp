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

#include <thread>

#include <gtest/gtest.h>

#include "prm/bus.hpp"

namespace prm::bus {
namespace {

using std::chrono::milliseconds;

TEST(TopicName, RejectsEmpty) { EXPECT_THROW(TopicName(std::string()), BusError); }

TEST(LocalBus, CreateFindAndDuplicate) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  EXPECT_EQ(bus.find_topic("a"), t);
  EXPECT_THROW(bus.create_topic("a", 4), DuplicateTopic);
  EXPECT_THROW(bus.find_topic("b"), UnknownTopic);
  EXPECT_THROW(bus.create_topic("z", 0), BusError);
  EXPECT_EQ(bus.ensure_topic("b", 2).name().str(), "b");
  EXPECT_EQ(bus.topic_names(), (std::vector<std::string>{"a", "b"}));
}

TEST(LocalBus, SeqsAreDenseFromZero) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  auto sub = bus.subscribe(t, {.queue_depth = 100});
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_EQ(bus.publish(t, std::to_string(i)), i);
  for (std::uint64_t i = 0; i < 10; ++i) {
    auto env = sub.try_next();
    ASSERT_TRUE(env);
    EXPECT_EQ(env->seq, i);
    EXPECT_EQ(env->payload, std::to_string(i));
    EXPECT_EQ(env->topic, "a");
  }
  EXPECT_FALSE(sub.try_next());
}

TEST(LocalBus, SubscribeIsLatched) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  EXPECT_FALSE(bus.latest(t));
  bus.publish(t, "x");
  bus.publish(t, "y");
  auto sub = bus.subscribe(t);
  auto env = sub.try_next();
  ASSERT_TRUE(env);
  EXPECT_EQ(env->payload, "y");
  EXPECT_EQ(env->seq, 1u);
  EXPECT_FALSE(sub.try_next());
  EXPECT_EQ(bus.latest(t)->payload, "y");
}

TEST(LocalBus, FullQueueDropsOldest) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  auto sub = bus.subscribe(t, {.queue_depth = 2});
  for (int i = 0; i < 5; ++i) bus.publish(t, std::to_string(i));
  EXPECT_EQ(sub.dropped(), 3u);
  EXPECT_EQ(sub.pending(), 2u);
  EXPECT_EQ(sub.try_next()->payload, "3");
  EXPECT_EQ(sub.try_next()->payload, "4");
}

TEST(LocalBus, HistoryBoundedByDepth) {
  LocalBus bus;
  auto t = bus.create_topic("a", 3);
  for (int i = 0; i < 5; ++i) bus.publish(t, std::to_string(i));
  const auto h = bus.history(t);
  ASSERT_EQ(h.size(), 3u);
  EXPECT_EQ(h.front().seq, 2u);
  EXPECT_EQ(bus.depth(t), 3u);
}

TEST(LocalBus, HandlerReceivesInline) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  std::vector<std::uint64_t> seen;
  auto sub = bus.subscribe(t, {.handler = [&](const MessageEnvelope& e) { seen.push_back(e.seq); }});
  bus.publish(t, "p");
  bus.publish(t, "q");
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(sub.pending(), 0u);
}

TEST(LocalBus, UnsubscribeDetaches) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  {
    auto sub = bus.subscribe(t);
    EXPECT_EQ(bus.subscriber_count(t), 1u);
    sub.unsubscribe();
    EXPECT_FALSE(sub.active());
    EXPECT_EQ(bus.subscriber_count(t), 0u);
  }
  auto sub = bus.subscribe(t);
  Subscription moved = std::move(sub);
  EXPECT_EQ(bus.subscriber_count(t), 1u);
  moved = Subscription();
  EXPECT_EQ(bus.subscriber_count(t), 0u);
}

TEST(LocalBus, NextWaitsForPublisher) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  auto sub = bus.subscribe(t);
  std::thread producer([&] {
    std::this_thread::sleep_for(milliseconds(20));
    bus.publish(t, "late");
  });
  auto env = sub.next(milliseconds(2000));
  producer.join();
  ASSERT_TRUE(env);
  EXPECT_EQ(env->payload, "late");
  EXPECT_FALSE(sub.next(milliseconds(5)));
}

TEST(LocalBus, ConcurrentPublishersKeepOneOrder) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  auto s1 = bus.subscribe(t, {.queue_depth = 10000});
  auto s2 = bus.subscribe(t, {.queue_depth = 10000});
  std::vector<std::thread> threads;
  for (int k = 0; k < 4; ++k) {
    threads.emplace_back([&, k] {
      for (int i = 0; i < 250; ++i) bus.publish(t, std::to_string(k) + ":" + std::to_string(i));
    });
  }
  for (auto& th : threads) th.join();
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto a = s1.try_next();
    auto b = s2.try_next();
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->seq, i);
    EXPECT_EQ(*a, *b);
  }
}

TEST(LocalBus, RepublishKeepsSeqAndTime) {
  LocalBus bus;
  auto t = bus.create_topic("a", 4);
  auto sub = bus.subscribe(t);
  bus.republish(t, MessageEnvelope{"ignored", 7, 1234, "p"});
  auto env = sub.try_next();
  ASSERT_TRUE(env);
  EXPECT_EQ(*env, (MessageEnvelope{"a", 7, 1234, "p"}));
  EXPECT_THROW(bus.republish(t, MessageEnvelope{"a", 7, 1, "p"}), BusError);
  EXPECT_EQ(bus.publish(t, "next"), 8u);
}

TEST(LocalBus, ServedOnce) {
  LocalBus bus;
  bus.mark_served();
  EXPECT_THROW(bus.mark_served(), BusError);
}

}  // namespace
}  // namespace prm::bus
