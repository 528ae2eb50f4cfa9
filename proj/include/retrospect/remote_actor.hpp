#pragma once

#include <string>

#include "retrospect/actor.hpp"

namespace retrospect {

// Chat-completions endpoint, e.g. "https://api.example.com/v1/chat/completions".
struct RemoteConfig {
  std::string endpoint;
  std::string model = "gpt-4";
  std::string api_key;
  int max_tokens = 64;
  int timeout_seconds = 30;
};

// Fills endpoint and api_key from RETROSPECT_ENDPOINT / RETROSPECT_API_KEY
// when they are not already set.
RemoteConfig remote_config_from_env(RemoteConfig base = {});

// Request body for one actor turn: the rendered prompt as a single user
// message at temperature 0.
std::string remote_request_body(const RemoteConfig& cfg, const ActorPrompt& prompt);

// First non-empty line of choices[0].message.content, trimmed.
// kEmptyAction when there is none, kParse on a malformed response.
std::string parse_remote_action(std::string_view response_body);

// Frozen LLM actor behind an HTTP API. kRemoteUnavailable on transport
// failures and non-200 replies.
class RemoteActor : public ActorPolicy {
 public:
  explicit RemoteActor(RemoteConfig cfg);
  std::string act(const ActorPrompt& prompt, const TaskSpec& task) const override;

 private:
  RemoteConfig cfg_;
};

}  // namespace retrospect
