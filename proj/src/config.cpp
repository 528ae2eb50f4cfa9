#include "retrospect/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "retrospect/envs.hpp"

namespace retrospect {

namespace {

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(ErrorKind::kParse, "config key " + key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0') {
    throw Error(ErrorKind::kParse, "config key " + key + ": expected a number, got '" + value + "'");
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter int_field(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_integer<T>(k, v); };
}

template <typename T>
Setter ppo_int_field(T PpoConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.ppo.*field = parse_integer<T>(k, v);
  };
}

Setter real_field(double ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_real(k, v); };
}

Setter ppo_real_field(double PpoConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.ppo.*field = parse_real(k, v); };
}

Setter string_field(std::string ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"env", string_field(&ExperimentConfig::env)},
      {"world_seed", int_field(&ExperimentConfig::world_seed)},
      {"n_train", int_field(&ExperimentConfig::n_train)},
      {"n_validation", int_field(&ExperimentConfig::n_validation)},
      {"actor", string_field(&ExperimentConfig::actor)},
      {"remote_endpoint", string_field(&ExperimentConfig::remote_endpoint)},
      {"remote_model", string_field(&ExperimentConfig::remote_model)},
      {"prompt_budget", int_field(&ExperimentConfig::prompt_budget)},
      {"collection_trials", int_field(&ExperimentConfig::collection_trials)},
      {"collection_rounds", int_field(&ExperimentConfig::collection_rounds)},
      {"collection_temperature", real_field(&ExperimentConfig::collection_temperature)},
      {"rm_learning_rate", real_field(&ExperimentConfig::rm_learning_rate)},
      {"rm_steps", int_field(&ExperimentConfig::rm_steps)},
      {"sft_epochs", int_field(&ExperimentConfig::sft_epochs)},
      {"sft_learning_rate", real_field(&ExperimentConfig::sft_learning_rate)},
      {"ppo_learning_rate", ppo_real_field(&PpoConfig::learning_rate)},
      {"ppo_epochs", ppo_int_field(&PpoConfig::ppo_epochs)},
      {"clip_epsilon", ppo_real_field(&PpoConfig::clip_epsilon)},
      {"beta_kl", ppo_real_field(&PpoConfig::beta_kl)},
      {"ppo_batch_size", ppo_int_field(&PpoConfig::batch_size)},
      {"ppo_max_steps", ppo_int_field(&PpoConfig::max_steps)},
      {"retries", int_field(&ExperimentConfig::retries)},
      {"best_of_n", int_field(&ExperimentConfig::best_of_n)},
      {"eval_temperature", real_field(&ExperimentConfig::eval_temperature)},
  };
  return table;
}

void check(const ExperimentConfig& c) {
  if (std::find(std::begin(envs::kEnvironmentIds), std::end(envs::kEnvironmentIds), c.env) ==
      std::end(envs::kEnvironmentIds)) {
    throw Error(ErrorKind::kInvalidArgument, "unknown env " + c.env);
  }
  if (c.actor != "scripted" && c.actor != "remote") throw Error(ErrorKind::kInvalidArgument, "actor must be scripted or remote");
  if (c.n_train < 1 || c.n_validation < 1) throw Error(ErrorKind::kInvalidArgument, "task counts must be >= 1");
  if (c.collection_trials < 2) throw Error(ErrorKind::kInvalidArgument, "collection_trials must be >= 2");
  if (c.collection_rounds < 1) throw Error(ErrorKind::kInvalidArgument, "collection_rounds must be >= 1");
  if (!(c.collection_temperature > 0.0) || !(c.eval_temperature > 0.0)) {
    throw Error(ErrorKind::kInvalidTemperature, "temperatures must be > 0");
  }
  if (c.retries < 1) throw Error(ErrorKind::kInvalidArgument, "retries must be >= 1");
  if (c.best_of_n < 1) throw Error(ErrorKind::kInvalidArgument, "best_of_n must be >= 1");
  c.ppo.validate();
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = envs::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kParse, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = envs::trim(stripped.substr(0, eq));
    const std::string value = envs::trim(stripped.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorKind::kParse, "unknown config key " + key);
    it->second(cfg, key, value);
  }
  check(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kPersistFailed, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
  auto i = [](auto v) { return std::to_string(v); };
  std::vector<std::pair<std::string, std::string>> out = {
      {"env", c.env},
      {"world_seed", i(c.world_seed)},
      {"n_train", i(c.n_train)},
      {"n_validation", i(c.n_validation)},
      {"actor", c.actor},
      {"remote_endpoint", c.remote_endpoint},
      {"remote_model", c.remote_model},
      {"prompt_budget", i(c.prompt_budget)},
      {"collection_trials", i(c.collection_trials)},
      {"collection_rounds", i(c.collection_rounds)},
      {"collection_temperature", format_exact(c.collection_temperature)},
      {"rm_learning_rate", format_exact(c.rm_learning_rate)},
      {"rm_steps", i(c.rm_steps)},
      {"sft_epochs", i(c.sft_epochs)},
      {"sft_learning_rate", format_exact(c.sft_learning_rate)},
      {"ppo_learning_rate", format_exact(c.ppo.learning_rate)},
      {"ppo_epochs", i(c.ppo.ppo_epochs)},
      {"clip_epsilon", format_exact(c.ppo.clip_epsilon)},
      {"beta_kl", format_exact(c.ppo.beta_kl)},
      {"ppo_batch_size", i(c.ppo.batch_size)},
      {"ppo_max_steps", i(c.ppo.max_steps)},
      {"retries", i(c.retries)},
      {"best_of_n", i(c.best_of_n)},
      {"eval_temperature", format_exact(c.eval_temperature)},
  };
  std::sort(out.begin(), out.end());
  return out;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + "=" + v + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace retrospect
