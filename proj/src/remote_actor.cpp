#include "retrospect/remote_actor.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "retrospect/envs.hpp"

namespace retrospect {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw Error(ErrorKind::kInvalidArgument, "endpoint needs a scheme: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace

RemoteConfig remote_config_from_env(RemoteConfig base) {
  if (base.endpoint.empty()) {
    if (const char* e = std::getenv("RETROSPECT_ENDPOINT")) base.endpoint = e;
  }
  if (base.api_key.empty()) {
    if (const char* k = std::getenv("RETROSPECT_API_KEY")) base.api_key = k;
  }
  return base;
}

std::string remote_request_body(const RemoteConfig& cfg, const ActorPrompt& prompt) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt.rendered}}});
  body["temperature"] = 0;
  body["top_p"] = 1;
  body["max_tokens"] = cfg.max_tokens;
  return body.dump();
}

std::string parse_remote_action(std::string_view response_body) {
  std::string content;
  try {
    const auto j = nlohmann::json::parse(response_body);
    content = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("unexpected completion payload: ") + e.what());
  }
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string line = envs::trim(std::string_view(content).substr(pos, end - pos));
    if (!line.empty()) return line;
    pos = end + 1;
  }
  throw Error(ErrorKind::kEmptyAction, "completion contained no action");
}

RemoteActor::RemoteActor(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw Error(ErrorKind::kRemoteUnavailable, "no endpoint configured");
  split_url(cfg_.endpoint);
}

std::string RemoteActor::act(const ActorPrompt& prompt, const TaskSpec&) const {
  const Url url = split_url(cfg_.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(cfg_.timeout_seconds);
  client.set_read_timeout(cfg_.timeout_seconds);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  const auto res = client.Post(url.path, headers, remote_request_body(cfg_, prompt), "application/json");
  if (!res) {
    throw Error(ErrorKind::kRemoteUnavailable, cfg_.endpoint + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::kRemoteUnavailable, cfg_.endpoint + " returned HTTP " + std::to_string(res->status));
  }
  return parse_remote_action(res->body);
}

}  // namespace retrospect
