#include <gtest/gtest.h>

#include <cstdlib>
#include <mutex>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/remote_actor.hpp"

using namespace retrospect;

namespace {

std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

// Local stand-in for a chat-completions API.
class FakeApi {
 public:
  FakeApi() {
    server_.Post("/v1/ok", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard<std::mutex> lock(mutex_);
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      res.set_content(completion("\n   Search[Mira Vale]  \nI will then look up the founder."), "application/json");
    });
    server_.Post("/v1/finish", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(completion("Finish[nobody]"), "application/json");
    });
    server_.Post("/v1/blank", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(completion("  \n\t\n"), "application/json");
    });
    server_.Post("/v1/down", [](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeApi() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  std::string last_body() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_body_;
  }
  std::string last_auth() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_auth_;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::string last_body_;
  std::string last_auth_;
};

ActorPrompt sample_prompt() {
  const std::vector<std::string> refl{"Look up the founder before answering."};
  return assemble_prompt("Who founded the guild?", {}, refl, 4096, "You are at the start.");
}

RemoteConfig config_for(const std::string& endpoint) {
  RemoteConfig cfg;
  cfg.endpoint = endpoint;
  cfg.api_key = "test-key";
  cfg.timeout_seconds = 5;
  return cfg;
}

}  // namespace

TEST(RemoteActor, SendsPromptAtTemperatureZeroAndParsesFirstLine) {
  FakeApi api;
  const RemoteActor actor(config_for(api.url("/v1/ok")));
  const ActorPrompt prompt = sample_prompt();
  const TaskSpec task;
  EXPECT_EQ(actor.act(prompt, task), "Search[Mira Vale]");
  const auto body = nlohmann::json::parse(api.last_body());
  EXPECT_EQ(body["model"], "gpt-4");
  EXPECT_EQ(body["temperature"], 0);
  EXPECT_EQ(body["max_tokens"], 64);
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], prompt.rendered);
  EXPECT_EQ(api.last_auth(), "Bearer test-key");
}

TEST(RemoteActor, BlankCompletionIsAnEmptyAction) {
  FakeApi api;
  const RemoteActor actor(config_for(api.url("/v1/blank")));
  try {
    actor.act(sample_prompt(), TaskSpec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyAction);
  }
}

TEST(RemoteActor, ServerErrorsAndClosedPortsAreUnavailable) {
  FakeApi api;
  for (const std::string& endpoint : {api.url("/v1/down"), std::string("http://127.0.0.1:1/v1/ok")}) {
    const RemoteActor actor(config_for(endpoint));
    try {
      actor.act(sample_prompt(), TaskSpec{});
      FAIL() << endpoint;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kRemoteUnavailable) << endpoint;
    }
  }
  try {
    RemoteActor actor(RemoteConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRemoteUnavailable);
  }
}

TEST(RemoteActor, DrivesARollout) {
  FakeApi api;
  const RemoteActor actor(config_for(api.url("/v1/finish")));
  const auto env = envs::make_environment("synthqa", 1);
  const Trajectory t = envs::rollout(*env, env->task("q001"), actor, {});
  ASSERT_EQ(t.steps.size(), 1u);
  EXPECT_EQ(t.steps[0].action_text, "Finish[nobody]");
  EXPECT_TRUE(t.terminated);
  EXPECT_FALSE(t.success);
}

TEST(RemoteActor, ParseRejectsMalformedPayloads) {
  EXPECT_EQ(parse_remote_action(completion("Lookup[founder]")), "Lookup[founder]");
  try {
    parse_remote_action("{\"choices\": []}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
}

TEST(RemoteActor, ConfigFromEnvironment) {
  ::setenv("RETROSPECT_ENDPOINT", "http://127.0.0.1:9/v1/chat/completions", 1);
  ::setenv("RETROSPECT_API_KEY", "from-env", 1);
  const RemoteConfig cfg = remote_config_from_env();
  EXPECT_EQ(cfg.endpoint, "http://127.0.0.1:9/v1/chat/completions");
  EXPECT_EQ(cfg.api_key, "from-env");
  RemoteConfig explicit_cfg;
  explicit_cfg.api_key = "explicit";
  EXPECT_EQ(remote_config_from_env(explicit_cfg).api_key, "explicit");
  ::unsetenv("RETROSPECT_ENDPOINT");
  ::unsetenv("RETROSPECT_API_KEY");
}
