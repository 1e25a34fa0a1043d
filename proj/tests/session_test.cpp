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

#include <gtest/gtest.h>

#include "prm/messages.hpp"
#include "prm/session.hpp"
#include "support/fixtures.hpp"

namespace prm::session {
namespace {

using bus::MessageEnvelope;

MessageEnvelope desc_env(std::uint64_t seq, std::uint64_t frame, std::int64_t t) {
  return {std::string(bus::kImageDescriptionTopic), seq, t,
          encode(ImageDescription{"task", frame, Timestamp{0}, "d", "mock", 0})};
}

MessageEnvelope cons_env(std::uint64_t seq, std::uint64_t frame, std::int64_t t) {
  return {std::string(bus::kConsultationTopic), seq, t,
          encode(Consultation{frame, "c", "stub", 0.2, {}})};
}

Recording make_recording(std::vector<MessageEnvelope> envs) {
  Recording r;
  r.header = RecordingHeader{"task", 0xabc, "2026-01-01T00:00:00.000Z"};
  for (auto& e : envs) r.entries.push_back({std::move(e), "2026-01-01T00:00:00.000Z"});
  std::sort(r.entries.begin(), r.entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.envelope.topic, a.envelope.seq) < std::tie(b.envelope.topic, b.envelope.seq);
  });
  return r;
}

TEST(Recorder, CapturesBothTopicsSkippingLatched) {
  bus::LocalBus bus;
  auto d = bus.create_topic(bus::kImageDescriptionTopic, 8);
  auto c = bus.create_topic(bus::kConsultationTopic, 8);
  bus.publish(d, "before");
  SessionRecorder recorder(bus, {bus::kImageDescriptionTopic, bus::kConsultationTopic});
  bus.publish(d, "a");
  bus.publish(c, "b");
  bus.publish(d, "c");
  EXPECT_EQ(recorder.size(), 3u);
  recorder.stop();
  bus.publish(d, "after");
  const auto rec = recorder.snapshot({"t", 1, "now"});
  ASSERT_EQ(rec.entries.size(), 3u);
  EXPECT_EQ(rec.entries[0].envelope.topic, bus::kConsultationTopic);
  const auto descs = rec.topic(bus::kImageDescriptionTopic);
  ASSERT_EQ(descs.size(), 2u);
  EXPECT_EQ(descs[0].payload, "a");
  EXPECT_EQ(descs[0].seq, 1u);
}

TEST(RecordingFile, RoundTrip) {
  testing::TempDir dir;
  const auto rec = make_recording({desc_env(0, 0, 10), cons_env(0, 0, 20), desc_env(1, 5, 30)});
  write_recording(dir / "r.jsonl", rec);
  const auto back = read_recording(dir / "r.jsonl");
  EXPECT_EQ(back.header, rec.header);
  EXPECT_EQ(back.entries, rec.entries);
  const auto text = testing::slurp(dir / "r.jsonl");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            R"({"task_name":"task","config_digest":"0000000000000abc","start_time":"2026-01-01T00:00:00.000Z"})");
}

TEST(RecordingFile, EmptyFileIsEmptyRecording) {
  const auto r = parse_recording("");
  EXPECT_FALSE(r.header);
  EXPECT_TRUE(r.entries.empty());
}

TEST(RecordingFile, CorruptLineNamed) {
  testing::TempDir dir;
  write_recording(dir / "r.jsonl", make_recording({desc_env(0, 0, 1), desc_env(1, 1, 2)}));
  auto text = testing::slurp(dir / "r.jsonl");
  const auto second_nl = text.find('\n', text.find('\n') + 1);
  text.insert(second_nl + 1, "{\"topic\":\"x\"}\n");
  try {
    parse_recording(text);
    FAIL();
  } catch (const RecordingError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  try {
    parse_recording("{\"task_name\":\"t\",\"config_digest\":\"zz\",\"start_time\":\"s\"}\n");
    FAIL();
  } catch (const RecordingError& e) {
    EXPECT_EQ(e.line(), 1);
  }
  EXPECT_THROW(parse_recording("not json\n"), RecordingError);
  EXPECT_THROW(read_recording(dir / "missing.jsonl"), IoError);
}

TEST(RecordingFile, MissingHeaderAndDisorder) {
  const auto rec = make_recording({desc_env(0, 0, 1), desc_env(1, 1, 2)});
  testing::TempDir dir;
  write_recording(dir / "r.jsonl", rec);
  const auto text = testing::slurp(dir / "r.jsonl");
  const auto body = text.substr(text.find('\n') + 1);
  EXPECT_THROW(parse_recording(body), RecordingError);
  const auto l1 = body.substr(0, body.find('\n') + 1);
  const auto l2 = body.substr(body.find('\n') + 1);
  EXPECT_THROW(parse_recording(text.substr(0, text.find('\n') + 1) + l2 + l1), RecordingError);
}

TEST(Replay, KeepsSeqsAndInterleaving) {
  const auto rec =
      make_recording({desc_env(3, 0, 10), cons_env(7, 0, 20), desc_env(4, 5, 30), cons_env(8, 5, 40)});
  bus::LocalBus bus;
  std::vector<MessageEnvelope> seen;
  auto d = bus.ensure_topic(bus::kImageDescriptionTopic, 8);
  auto c = bus.ensure_topic(bus::kConsultationTopic, 8);
  auto sd = bus.subscribe(d, {.handler = [&](const MessageEnvelope& e) { seen.push_back(e); }});
  auto sc = bus.subscribe(c, {.handler = [&](const MessageEnvelope& e) { seen.push_back(e); }});
  EXPECT_EQ(replay(rec, bus), 4u);
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_EQ(seen[0], rec.entries[2].envelope);
  EXPECT_EQ(seen[1], rec.entries[0].envelope);
  EXPECT_EQ(seen[3].publish_time, 40);
  EXPECT_EQ(seen[3].seq, 8u);

  bus::LocalBus only;
  EXPECT_EQ(replay(rec, only, {{std::string(bus::kConsultationTopic)}}), 2u);
}

TEST(Audit, CleanSession) {
  const auto r = audit_causality(
      make_recording({desc_env(0, 0, 10), cons_env(0, 0, 20), desc_env(1, 5, 30), cons_env(1, 5, 40)}));
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.descriptions, 2u);
  EXPECT_EQ(r.consultations, 2u);
}

TEST(Audit, DetectsViolations) {
  EXPECT_FALSE(audit_causality(make_recording({cons_env(0, 9, 1)})).ok());
  EXPECT_FALSE(audit_causality(make_recording({desc_env(0, 1, 50), cons_env(0, 1, 10)})).ok());
  const auto dup = audit_causality(
      make_recording({desc_env(0, 1, 1), cons_env(0, 1, 2), cons_env(1, 1, 3)}));
  ASSERT_EQ(dup.violations.size(), 1u);
  EXPECT_NE(dup.violations[0].find("more than one"), std::string::npos);
  auto junk = make_recording({desc_env(0, 1, 1)});
  junk.entries[0].envelope.payload = "junk";
  EXPECT_FALSE(audit_causality(junk).ok());
}

}  // namespace
}  // namespace prm::session
