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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include <gtest/gtest.h>

#include "prm/remote.hpp"
#include "prm/wire.hpp"
#include "support/fixtures.hpp"

namespace prm::bus {
namespace {

using std::chrono::milliseconds;

TEST(Address, ParsesForms) {
  auto a = Address::parse("tcp://127.0.0.1:5000");
  EXPECT_EQ(a.kind, Address::Kind::tcp);
  EXPECT_EQ(a.host, "127.0.0.1");
  EXPECT_EQ(a.port, 5000);
  EXPECT_EQ(Address::parse("localhost:0").host, "localhost");
  EXPECT_EQ(Address::parse(":7").host, "127.0.0.1");
  auto u = Address::parse("unix:/tmp/x.sock");
  EXPECT_EQ(u.kind, Address::Kind::unix_socket);
  EXPECT_EQ(u.path, "/tmp/x.sock");
  EXPECT_EQ(u.to_string(), "unix:/tmp/x.sock");
  EXPECT_EQ(a.to_string(), "tcp://127.0.0.1:5000");
  EXPECT_THROW(Address::parse("nohost"), TransportError);
  EXPECT_THROW(Address::parse("h:99999"), TransportError);
  EXPECT_THROW(Address::parse("h:"), TransportError);
  EXPECT_THROW(Address::parse("unix:"), TransportError);
}

TEST(RemoteBus, ConnectRefusedIsTransportError) {
  EXPECT_THROW(RemoteBus::connect(Address::parse("127.0.0.1:1")), TransportError);
}

TEST(RemoteBus, PublishAndSubscribeAcrossSocket) {
  LocalBus bus;
  auto local_topic = bus.create_topic("t", 8);
  BusServer server(bus, Address::parse("127.0.0.1:0"));
  ASSERT_NE(server.address().port, 0);
  auto remote = RemoteBus::connect(server.address());
  auto topic = remote->find_topic("t");
  EXPECT_THROW(remote->find_topic("missing"), UnknownTopic);
  EXPECT_THROW(remote->create_topic("t", 8), DuplicateTopic);

  auto sub = remote->subscribe(topic, {.queue_depth = 100});
  auto local_sub = bus.subscribe(local_topic, {.queue_depth = 100});
  EXPECT_EQ(remote->publish(topic, std::string("\0bin", 4)), 0u);
  EXPECT_EQ(bus.publish(local_topic, "from local"), 1u);

  auto a = sub.next(milliseconds(2000));
  auto b = sub.next(milliseconds(2000));
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->payload, std::string("\0bin", 4));
  EXPECT_EQ(b->payload, "from local");
  EXPECT_EQ(b->seq, 1u);
  EXPECT_EQ(local_sub.next(milliseconds(100))->payload, std::string("\0bin", 4));
  EXPECT_EQ(remote->latest(topic)->seq, 1u);
  remote->close();
  EXPECT_FALSE(remote->connected());
}

TEST(RemoteBus, UnixSocket) {
  testing::TempDir dir;
  LocalBus bus;
  BusServer server(bus, Address::parse("unix:" + (dir / "bus.sock").string()));
  auto remote = RemoteBus::connect(server.address());
  auto t = remote->create_topic("u", 4);
  remote->publish(t, "x");
  EXPECT_EQ(bus.latest(bus.find_topic("u"))->payload, "x");
}

TEST(BusServer, MalformedClientIsDroppedOthersContinue) {
  LocalBus bus;
  auto t = bus.create_topic("t", 8);
  BusServer server(bus, Address::parse("127.0.0.1:0"));
  auto good = RemoteBus::connect(server.address());
  auto sub = good->subscribe(good->find_topic("t"), {.queue_depth = 10});

  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(server.address().port);
  inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  ASSERT_EQ(connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  const auto garbage = wire::encode_frame("this is not json");
  ASSERT_EQ(write(fd, garbage.data(), garbage.size()), static_cast<ssize_t>(garbage.size()));
  std::string received;
  char buf[256];
  for (ssize_t n; (n = read(fd, buf, sizeof buf)) > 0;) received.append(buf, n);
  wire::FrameDecoder decoder;
  decoder.feed(received);
  const auto reply = decoder.next();
  ASSERT_TRUE(reply.has_value());
  EXPECT_NE(reply->find("ProtocolError"), std::string::npos);
  close(fd);

  for (int i = 0; i < 50 && server.protocol_errors() == 0; ++i) {
    std::this_thread::sleep_for(milliseconds(10));
  }
  EXPECT_GE(server.protocol_errors(), 1u);
  bus.publish(t, "still fine");
  auto env = sub.next(milliseconds(2000));
  ASSERT_TRUE(env);
  EXPECT_EQ(env->payload, "still fine");
}

TEST(BusServer, IdleAfterUse) {
  LocalBus bus;
  BusServer server(bus, Address::parse("127.0.0.1:0"));
  EXPECT_FALSE(server.wait_until_idle_after_use(milliseconds(20)));
  {
    auto remote = RemoteBus::connect(server.address());
    remote->create_topic("x", 1);
    EXPECT_EQ(server.active_connections(), 1u);
  }
  EXPECT_TRUE(server.wait_until_idle_after_use(milliseconds(2000)));
  EXPECT_EQ(server.total_connections(), 1u);
}

TEST(BusServer, BusServedOnce) {
  LocalBus bus;
  BusServer server(bus, Address::parse("127.0.0.1:0"));
  EXPECT_THROW(BusServer(bus, Address::parse("127.0.0.1:0")), BusError);
}

TEST(RemoteBus, ConnectRetriesUntilServerAppears) {
  LocalBus bus;
  // Grab a free port, then start serving on it a little later.
  std::uint16_t port = 0;
  {
    LocalBus probe;
    BusServer s(probe, Address::parse("127.0.0.1:0"));
    port = s.address().port;
  }
  std::thread later([&] {
    std::this_thread::sleep_for(milliseconds(150));
    BusServer server(bus, Address::parse("127.0.0.1:" + std::to_string(port)));
    server.wait_until_idle_after_use(milliseconds(3000));
  });
  RemoteBus::Options o;
  o.connect_timeout = milliseconds(3000);
  auto remote = RemoteBus::connect(Address::parse("127.0.0.1:" + std::to_string(port)), o);
  EXPECT_TRUE(remote->connected());
  remote->close();
  later.join();
}

}  // namespace
}  // namespace prm::bus
