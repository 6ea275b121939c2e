#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "qalam/error.hpp"
#include "qalam/http_client.hpp"

namespace qalam {
namespace {

// In-process server on an ephemeral port.
class Server {
 public:
  Server() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Server() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& raw() { return server_; }
  EndpointConfig config() const {
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_);
    c.decoding.model = "stub-model";
    c.timeout_seconds = 5;
    return c;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

using nlohmann::json;

TEST(HttpEndpoint, OpenAiShapedCompletion) {
  Server s;
  json seen;
  s.raw().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(json{{"choices", {{{"message", {{"content", "Final answer: B"}}}, {"finish_reason", "stop"}}}}}.dump(),
                    "application/json");
  });
  HttpEndpoint ep(s.config());
  cot::TeacherRequest req{"i1", "hello", {"teacher", 0.0, 256}};
  const auto c = ep.complete(req);
  EXPECT_EQ(c.text, "Final answer: B");
  EXPECT_EQ(c.finish_status, "stop");
  EXPECT_EQ(seen["model"], "teacher");
  EXPECT_EQ(seen["max_tokens"], 256);
  EXPECT_EQ(seen["messages"][0]["content"], "hello");
  EXPECT_EQ(seen["messages"][0]["role"], "user");
}

TEST(HttpEndpoint, PlainShapeAndModelClient) {
  Server s;
  s.raw().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    res.set_content(json{{"text", "echo " + body["messages"][0]["content"].get<std::string>()},
                         {"finish_status", "length"}}.dump(),
                    "application/json");
  });
  s.raw().Post("/v1/logprob", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    res.set_content(json{{"logprob", -3.5}, {"bytes", body["continuation"].get<std::string>().size()}, {"tokens", 2}}.dump(),
                    "application/json");
  });
  HttpEndpoint ep(s.config());
  EXPECT_EQ(ep.complete("i", "ping"), "echo ping");
  const auto lp = ep.logprob("Q", " yes");
  EXPECT_DOUBLE_EQ(lp.logprob, -3.5);
  EXPECT_EQ(lp.bytes, 4u);
  EXPECT_EQ(lp.tokens, 2u);
}

TEST(HttpEndpoint, StatusMapping) {
  Server s;
  std::atomic<int> status{401};
  s.raw().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = status.load();
    res.set_content("{}", "application/json");
  });
  HttpEndpoint ep(s.config());
  EXPECT_THROW(ep.complete("i", "p"), AuthError);
  status = 403;
  EXPECT_THROW(ep.complete("i", "p"), AuthError);
  for (int code : {408, 429, 500, 503}) {
    status = code;
    EXPECT_THROW(ep.complete("i", "p"), TransportError) << code;
  }
  status = 404;
  try {
    ep.complete("i", "p");
    FAIL();
  } catch (const TransportError&) {
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "endpoint_error");
  }
}

TEST(HttpEndpoint, UnreachableIsTransportError) {
  EndpointConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.timeout_seconds = 1;
  HttpEndpoint ep(c);
  EXPECT_THROW(ep.complete("i", "p"), TransportError);
}

TEST(HttpEndpoint, RetriedBatchRecoversFrom503) {
  Server s;
  std::atomic<int> calls{0};
  s.raw().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"text":"ok"})", "application/json");
  });
  HttpEndpoint ep(s.config());
  RetryPolicy p;
  p.max_in_flight = 1;
  p.sleep = [](std::chrono::milliseconds) {};
  std::size_t retries = 0;
  const std::vector<cot::TeacherRequest> reqs{{"a", "p", {}}};
  const auto out = cot::run_batch(reqs, ep, p, {}, [&](const RetryEvent&) { ++retries; });
  EXPECT_TRUE(out[0].ok);
  EXPECT_EQ(out[0].text, "ok");
  EXPECT_EQ(retries, 2u);
}

TEST(HttpEndpoint, BearerTokenFromEnvironment) {
  Server s;
  std::string auth;
  s.raw().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"text":"ok"})", "application/json");
  });
  auto cfg = s.config();
  cfg.api_key_env = "QALAM_TEST_KEY";
  ::unsetenv("QALAM_TEST_KEY");
  EXPECT_THROW(HttpEndpoint{cfg}, AuthError);
  ::setenv("QALAM_TEST_KEY", "sekret", 1);
  HttpEndpoint ep(cfg);
  ep.complete("i", "p");
  EXPECT_EQ(auth, "Bearer sekret");
  ::unsetenv("QALAM_TEST_KEY");
}

TEST(EndpointConfig, JsonRoundTrip) {
  EndpointConfig c;
  c.base_url = "https://example.invalid";
  c.api_key_env = "KEY";
  c.decoding.model = "m";
  c.timeout_seconds = 9;
  EXPECT_EQ(to_json(endpoint_from_json(to_json(c))), to_json(c));
  EXPECT_THROW(HttpEndpoint{EndpointConfig{}}, InvalidArgument);
}

}  // namespace
}  // namespace qalam
