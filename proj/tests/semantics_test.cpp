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

#include <cstdlib>

#include <gtest/gtest.h>
#include <json.hpp>

#include "prm/http.hpp"
#include "prm/semantics.hpp"
#include "support/fixtures.hpp"
#include "support/stub_server.hpp"

namespace prm::semantics {
namespace {

using nlohmann::json;
using testing::StubReply;
using testing::StubServer;
using testing::text_reply;

constexpr const char* kCarmatePrompt =
    "Describe the driver's current level of focus on driving based on the visual cues, Answer "
    "with one short sentence.";

Frame rgb_frame(std::uint32_t w = 2, std::uint32_t h = 1) {
  Frame f;
  f.width = w;
  f.height = h;
  f.format = PixelFormat::rgb8;
  f.data = std::string(w * h * 3, '\x7f');
  return f;
}

BackendSpec http_spec(BackendId id, const std::string& url, int retries = 0) {
  BackendSpec spec;
  spec.id = id;
  spec.endpoint = url;
  spec.retries = retries;
  spec.timeout = std::chrono::milliseconds(2000);
  spec.params.temperature = 0.2;
  spec.params.llama_version = "13B";
  return spec;
}

TEST(MockScript, OrderedLookup) {
  MockScript script({{"phone", "p1", "with prompt"}, {"phone", std::nullopt, "any prompt"}},
                    "fallback");
  EXPECT_EQ(script.lookup(std::string("phone"), "p1"), "with prompt");
  EXPECT_EQ(script.lookup(std::string("phone"), "p2"), "any prompt");
  EXPECT_EQ(script.lookup(std::string("other"), "p1"), "fallback");
  EXPECT_EQ(script.lookup(std::nullopt, "p1"), "fallback");
  EXPECT_EQ(script.size(), 2u);
}

TEST(MockScript, FromJsonAndErrors) {
  const auto s = MockScript::from_json(
      R"({"default":"d","entries":[{"label":"a","text":"A"},{"label":"b","prompt":"q","text":"B"}]})");
  EXPECT_EQ(s.lookup(std::string("b"), "q"), "B");
  EXPECT_EQ(s.fallback(), "d");
  EXPECT_THROW(MockScript::from_json("[]"), Error);
  EXPECT_THROW(MockScript::from_json(R"({"entries":[]})"), Error);
  EXPECT_THROW(MockScript::from_json(R"({"default":"d","entries":[{"label":"a"}]})"), Error);
  EXPECT_THROW(MockScript::load("/nonexistent.json"), IoError);
}

TEST(MockBackend, DescribesByLabel) {
  auto script = std::make_shared<const MockScript>(
      MockScript::load(testing::data_dir() / "carmate" / "mock_script.json"));
  MockBackend backend(script);
  auto frame = rgb_frame();
  frame.label = "phone";
  const auto r = backend.describe(frame, kCarmatePrompt);
  EXPECT_NE(r.text.find("phone"), std::string::npos);
  EXPECT_EQ(r.model_tag, "mock");
  EXPECT_EQ(backend.id(), BackendId::mock);
  EXPECT_THROW(backend.describe(frame, ""), std::invalid_argument);
}

TEST(MaskSummary, Rendering) {
  EXPECT_EQ(render_mask_summary({{{0.25, std::nullopt}}}),
            "1 region detected; largest covers 25% of frame");
  EXPECT_EQ(render_mask_summary({{{0.1, "a"}, {0.425, "b"}, {0.2, std::nullopt}}}),
            "3 regions detected; largest covers 43% of frame");
}

TEST(HttpDescribe, SendsPromptAndImage) {
  StubServer server([](int, const std::string&, const std::string&) {
    return StubReply{200, text_reply("The driver looks at the road."), {}};
  });
  HttpDescribeBackend backend(http_spec(BackendId::llava, server.url()));
  auto frame = rgb_frame(2, 1);
  const auto r = backend.describe(frame, kCarmatePrompt);
  EXPECT_EQ(r.text, "The driver looks at the road.");
  EXPECT_EQ(r.model_tag, "llava-13B");
  ASSERT_EQ(server.calls(), 1);
  const auto body = json::parse(server.bodies()[0]);
  EXPECT_EQ(body["prompt"], kCarmatePrompt);
  EXPECT_EQ(body["image_format"], "rgb8");
  EXPECT_EQ(body["width"], 2);
  EXPECT_EQ(body["height"], 1);
  EXPECT_EQ(base64_decode(body["image_b64"].get<std::string>()), frame.data);
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.2);
  EXPECT_EQ(body["model"], "llava-13B");
}

TEST(HttpDescribe, MiniGpt4SendsConfiguration) {
  StubServer server([](int, const std::string&, const std::string&) {
    return StubReply{200, text_reply("ok"), {}};
  });
  auto spec = http_spec(BackendId::minigpt4, server.url());
  spec.params.configuration = "minigpt4_eval.yaml";
  HttpDescribeBackend backend(spec);
  Frame png;
  png.format = PixelFormat::png_bytes;
  png.data = "\x89PNG";
  EXPECT_EQ(backend.describe(png, "p").model_tag, "minigpt4");
  const auto body = json::parse(server.bodies()[0]);
  EXPECT_EQ(body["configuration"], "minigpt4_eval.yaml");
  EXPECT_EQ(body["image_format"], "png");
  EXPECT_FALSE(body.contains("width"));
}

TEST(HttpDescribe, RetriesServerErrors) {
  StubServer server([](int call, const std::string&, const std::string&) {
    if (call < 2) return StubReply{503, "{}", {}};
    return StubReply{200, text_reply("third time"), {}};
  });
  HttpDescribeBackend backend(http_spec(BackendId::llava, server.url(), 2));
  EXPECT_EQ(backend.describe(rgb_frame(), "p").text, "third time");
  EXPECT_EQ(server.calls(), 3);
}

TEST(HttpDescribe, ExhaustedRetriesRaiseLastKind) {
  StubServer server([](int, const std::string&, const std::string&) {
    return StubReply{500, "{}", {}};
  });
  HttpDescribeBackend backend(http_spec(BackendId::llava, server.url(), 1));
  EXPECT_THROW(backend.describe(rgb_frame(), "p"), BackendProtocolError);
  EXPECT_EQ(server.calls(), 2);
}

TEST(HttpDescribe, ClientErrorsAreNotRetried) {
  StubServer server([](int, const std::string&, const std::string&) {
    return StubReply{400, "{}", {}};
  });
  HttpDescribeBackend backend(http_spec(BackendId::llava, server.url(), 3));
  EXPECT_THROW(backend.describe(rgb_frame(), "p"), BackendProtocolError);
  EXPECT_EQ(server.calls(), 1);
}

TEST(HttpDescribe, MalformedReplies) {
  for (const std::string body : {"not json", "{}", R"({"text":""})", R"({"text":3})"}) {
    StubServer server([body](int, const std::string&, const std::string&) {
      return StubReply{200, body, {}};
    });
    HttpDescribeBackend backend(http_spec(BackendId::llava, server.url(), 2));
    EXPECT_THROW(backend.describe(rgb_frame(), "p"), BackendProtocolError) << body;
    EXPECT_EQ(server.calls(), 1) << body;
  }
}

TEST(HttpDescribe, Timeout) {
  StubServer server([](int, const std::string&, const std::string&) {
    return StubReply{200, text_reply("slow"), std::chrono::milliseconds(600)};
  });
  auto spec = http_spec(BackendId::llava, server.url());
  spec.timeout = std::chrono::milliseconds(100);
  HttpDescribeBackend backend(spec);
  EXPECT_THROW(backend.describe(rgb_frame(), "p"), BackendTimeout);
}

TEST(HttpDescribe, Unreachable) {
  auto spec = http_spec(BackendId::llava, "http://127.0.0.1:1");
  spec.timeout = std::chrono::milliseconds(500);
  HttpDescribeBackend backend(spec);
  EXPECT_THROW(backend.describe(rgb_frame(), "p"), BackendUnavailable);
}

TEST(Http, ParseUrl) {
  const auto u = http::parse_url("http://host:81/base/");
  EXPECT_EQ(u.origin, "http://host:81");
  EXPECT_EQ(u.base_path, "/base");
  EXPECT_THROW(http::parse_url("https://host"), BackendUnavailable);
  EXPECT_THROW(http::parse_url("host:80"), BackendUnavailable);
}

TEST(Sam, SegmentsAndSummarizes) {
  StubServer server([](int, const std::string& path, const std::string&) {
    EXPECT_EQ(path, "/segment");
    return StubReply{200,
                     R"({"masks":[{"area_fraction":0.5,"label":"driver"},{"area_fraction":0.125}]})",
                     {}};
  });
  auto spec = http_spec(BackendId::sam, server.url());
  spec.params.weights = "sam_vit_h_4b8939.pth";
  SamBackend backend(spec);
  const auto summary = backend.segment(rgb_frame(), "p");
  ASSERT_EQ(summary.mask_count(), 2u);
  EXPECT_EQ(summary.masks[0].label, "driver");
  const auto r = backend.describe(rgb_frame(), "p");
  EXPECT_EQ(r.text, "2 regions detected; largest covers 50% of frame");
  EXPECT_EQ(r.model_tag, "sam");
  EXPECT_EQ(json::parse(server.bodies()[0])["weights"], "sam_vit_h_4b8939.pth");
}

TEST(Sam, RejectsBadMasks) {
  for (const std::string body :
       {R"({"masks":[]})", R"({"masks":[{"area_fraction":1.5}]})", R"({"nomasks":1})"}) {
    StubServer server([body](int, const std::string&, const std::string&) {
      return StubReply{200, body, {}};
    });
    SamBackend backend(http_spec(BackendId::sam, server.url()));
    EXPECT_THROW(backend.segment(rgb_frame(), "p"), BackendProtocolError) << body;
  }
}

TEST(Dispatch, SegmentOnlyForSam) {
  EXPECT_THROW(segment(http_spec(BackendId::llava, "http://127.0.0.1:1"), rgb_frame(), "p"),
               std::invalid_argument);
}

TEST(Registry, BuiltinsCoverEveryMethod) {
  const auto registry = BackendRegistry::with_builtins();
  EXPECT_TRUE(registry.missing().empty());
  BackendRegistry empty;
  EXPECT_EQ(empty.missing().size(), 4u);
  EXPECT_THROW(empty.create(BackendSpec{}), std::invalid_argument);
  EXPECT_EQ(registry.create(http_spec(BackendId::minigpt4, "http://x:1"))->id(),
            BackendId::minigpt4);
}

TEST(BuildBackend, EndpointPrecedence) {
  const auto config = config::load_task_config(testing::cfg_dir() / "carmate.yaml").config;
  unsetenv(std::string(kBackendUrlEnv).c_str());
  EXPECT_EQ(build_backend(config).endpoint, std::string(kDefaultEndpoint));
  setenv(std::string(kBackendUrlEnv).c_str(), "http://env:9", 1);
  EXPECT_EQ(build_backend(config).endpoint, "http://env:9");
  EXPECT_EQ(build_backend(config, "http://flag:7").endpoint, "http://flag:7");
  unsetenv(std::string(kBackendUrlEnv).c_str());
  const auto spec = build_backend(config);
  EXPECT_EQ(spec.id, BackendId::llava);
  EXPECT_EQ(spec.params.temperature, 0.2);
  EXPECT_EQ(spec.params.llama_version, "13B");
}

TEST(BuildBackend, MockScriptRelativeToBase) {
  const auto path = testing::cfg_dir() / "carmate_offline.yaml";
  const auto config = config::load_task_config(path).config;
  const auto spec = build_backend(config, std::nullopt, path.parent_path());
  EXPECT_EQ(spec.id, BackendId::mock);
  ASSERT_TRUE(spec.script);
  EXPECT_EQ(spec.script->size(), 2u);
  EXPECT_FALSE(spec.endpoint);
}

TEST(BuildBackend, MissingBlock) {
  auto config = config::load_task_config(testing::cfg_dir() / "carmate.yaml").config;
  config.camera.method = config::DescriptionMethod::mock;
  EXPECT_THROW(build_backend(config), config::MissingField);
  config.camera.method = config::DescriptionMethod::sam;
  config.sam.reset();
  EXPECT_THROW(build_backend(config), config::MissingField);
}

}  // namespace
}  // namespace prm::semantics
