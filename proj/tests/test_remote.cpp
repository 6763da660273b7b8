// Copyright 2026 The ipa-pipe Authors
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

#include <functional>
#include <thread>

#include "ipapipe/pipeline.hpp"
#include "ipapipe/remote.hpp"
#include "test_util.hpp"

namespace ipapipe::remote {
namespace {

// Local HTTP server on an ephemeral port; the handler sees the parsed body.
class MockServer {
 public:
  using Handler = std::function<void(const nlohmann::json&, const httplib::Request&, httplib::Response&)>;

  explicit MockServer(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/run", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      ++requests;
      last_auth = req.get_header_value("Authorization");
      handler_(nlohmann::json::parse(req.body), req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/run"; }

  int requests = 0;
  std::string last_auth;

 private:
  Handler handler_;
  httplib::Server server_;
  std::mutex mu_;
  int port_ = 0;
  std::thread thread_;
};

void reply(httplib::Response& res, const nlohmann::json& j) { res.set_content(j.dump(), "application/json"); }

TEST(Endpoint, Parse) {
  auto ep = parse_endpoint("https://api.example.com/v1/chat");
  EXPECT_EQ(ep.origin, "https://api.example.com");
  EXPECT_EQ(ep.path, "/v1/chat");
  EXPECT_EQ(parse_endpoint("http://h:8080").path, "/");
  EXPECT_THROW(parse_endpoint("api.example.com/x"), Error);
  EXPECT_THROW(parse_endpoint("ftp://h/x"), Error);
  EXPECT_THROW(parse_endpoint("http:///x"), Error);
}

TEST(NativeRewrite, SendsPromptAndReadsText) {
  nlohmann::json seen;
  MockServer srv([&](const nlohmann::json& body, const httplib::Request&, httplib::Response& res) {
    seen = body;
    reply(res, {{"text", "out"}});
  });
  HttpCompletionClient client(srv.url(), "k1");
  EXPECT_EQ(client.complete("S", "U"), "out");
  EXPECT_EQ(seen["system"], "S");
  EXPECT_EQ(seen["user"], "U");
  EXPECT_EQ(srv.last_auth, "Bearer k1");
}

TEST(NativeRewrite, MissingKeyFailsWithoutRequest) {
  MockServer srv([](const nlohmann::json&, const httplib::Request&, httplib::Response& res) { reply(res, {{"text", "x"}}); });
  HttpCompletionClient client(srv.url(), std::nullopt);
  try {
    client.complete("S", "U");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(kApiKeyEnv), std::string::npos);
  }
  EXPECT_EQ(srv.requests, 0);
}

TEST(NativeRewrite, BadResponses) {
  MockServer srv([](const nlohmann::json& body, const httplib::Request&, httplib::Response& res) {
    const std::string u = body["user"];
    if (u == "status") {
      res.status = 500;
    } else if (u == "shape") {
      reply(res, {{"txt", "x"}});
    } else {
      res.set_content("not json", "application/json");
    }
  });
  HttpCompletionClient client(srv.url(), "k");
  EXPECT_THROW(client.complete("S", "status"), Error);
  EXPECT_THROW(client.complete("S", "shape"), Error);
  EXPECT_THROW(client.complete("S", "garbage"), Error);
}

TEST(ChatAdapter, ReadsFirstChoice) {
  nlohmann::json seen;
  MockServer srv([&](const nlohmann::json& body, const httplib::Request&, httplib::Response& res) {
    seen = body;
    reply(res, {{"choices", {{{"message", {{"role", "assistant"}, {"content", "answer"}}}}}}});
  });
  ChatCompletionsClient client(srv.url(), "k", "m1");
  EXPECT_EQ(client.complete("S", "U"), "answer");
  EXPECT_EQ(seen["model"], "m1");
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][1]["content"], "U");
}

TEST(ChatAdapter, MalformedChoices) {
  MockServer srv([](const nlohmann::json&, const httplib::Request&, httplib::Response& res) {
    reply(res, {{"choices", nlohmann::json::array()}});
  });
  ChatCompletionsClient client(srv.url(), "k", "m");
  EXPECT_THROW(client.complete("S", "U"), Error);
}

TEST(RemoteTranscription, FramedRoundTrip) {
  MockServer srv([](const nlohmann::json& body, const httplib::Request&, httplib::Response& res) {
    reply(res, {{"ipa", "<s> " + testing::echo_upper(body["framed"].get<std::string>()) + " </s>"}});
  });
  RemoteBackend be(srv.url(), "k", "<s>", "</s>");
  EXPECT_EQ(be.generate("a b"), "A B");
  std::unordered_set<char32_t> cs = {'a', 'b'};
  EXPECT_EQ(transcribe::transcribe_word("ab-ba", stat::CharSet(cs), be), "AB-BA");
}

TEST(RemoteTranscription, EmptyOrMissingIpaIsError) {
  MockServer srv([](const nlohmann::json& body, const httplib::Request&, httplib::Response& res) {
    if (body["framed"] == "a") reply(res, {{"ipa", "  "}});
    else reply(res, {{"other", 1}});
  });
  RemoteBackend be(srv.url(), "k");
  EXPECT_THROW(be.generate("a"), Error);
  EXPECT_THROW(be.generate("b"), Error);
}

TEST(RemoteTranscription, UnreachableEndpointSurfacesAsBackendError) {
  RemoteBackend be("http://127.0.0.1:1/none", "k");
  std::unordered_set<char32_t> cs = {'a'};
  EXPECT_THROW(transcribe::transcribe_word("a", stat::CharSet(cs), be), transcribe::BackendError);
}

TEST(RemoteRewrite, ContextualRewriteThroughHttp) {
  auto lex = rewrite::load_lexicon(testing::data_path("bn_numerals.lex"));
  const std::string text = "X " + testing::cps(U"৩");
  MockServer srv([&](const nlohmann::json&, const httplib::Request&, httplib::Response& res) {
    reply(res, {{"text", "X " + lex.unit(3)}});
  });
  HttpCompletionClient client(srv.url(), "k");
  auto r = rewrite::rewrite_contextual(text, rewrite::PromptTemplate{}, client, lex);
  EXPECT_EQ(r.source, rewrite::RewriteSource::remote);
  EXPECT_EQ(r.rewritten, "X " + lex.unit(3));
}

}  // namespace
}  // namespace ipapipe::remote
