#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "retrospect/actor.hpp"
#include "retrospect/rlhf.hpp"

namespace retrospect {

// Every knob of a run. Stored on disk as "key = value" lines; '#' starts a
// comment. Keys not listed here are rejected.
struct ExperimentConfig {
  std::string env = "synthqa";
  std::uint64_t world_seed = 1;
  int n_train = 50;
  int n_validation = 30;

  std::string actor = "scripted";  // or "remote"
  std::string remote_endpoint;
  std::string remote_model = "gpt-4";
  std::size_t prompt_budget = kDefaultPromptBudget;

  int collection_trials = 3;
  int collection_rounds = 4;  // passes over the training tasks
  double collection_temperature = 0.9;

  double rm_learning_rate = 0.5;
  int rm_steps = 2000;

  int sft_epochs = 50;
  double sft_learning_rate = 0.5;

  PpoConfig ppo;

  int retries = 4;
  int best_of_n = 4;
  double eval_temperature = 0.9;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Canonical form: one "key=value" line per field, keys sorted, reals with 17
// significant digits.
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);

}  // namespace retrospect
