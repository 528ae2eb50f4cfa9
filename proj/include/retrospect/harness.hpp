#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retrospect/actor.hpp"
#include "retrospect/config.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/retro.hpp"
#include "retrospect/rlhf.hpp"

namespace retrospect {

enum class Baseline { kNoReflection, kFrozenRetro, kReinforcedRetro };

inline constexpr Baseline kAllBaselines[] = {Baseline::kNoReflection, Baseline::kFrozenRetro,
                                             Baseline::kReinforcedRetro};

std::string_view to_string(Baseline baseline);
std::optional<Baseline> parse_baseline(std::string_view name);

// How reflections are produced between trials.
//   no_reflection     long-term memory stays empty
//   frozen_retro      one draw from the policy, uniform when none is given
//   reinforced_retro  best-of-n under the reward model
struct AgentConfig {
  Baseline baseline = Baseline::kNoReflection;
  std::optional<RetroPolicy> policy;
  std::optional<RewardModel> reward_model;
  int best_of_n = 4;
  double temperature = 0.9;
  std::size_t prompt_budget = kDefaultPromptBudget;
};

// Trained parameters are kept only for the reinforced baseline.
AgentConfig make_agent(Baseline baseline, const ExperimentConfig& cfg,
                       std::optional<RetroPolicy> policy = std::nullopt,
                       std::optional<RewardModel> reward_model = std::nullopt);

struct TaskOutcome {
  std::string task_id;
  FailureMode failure_mode = FailureMode::kNone;
  std::vector<double> returns;          // one per trial actually run
  std::vector<int> reflection_ids;      // template id added after each failed trial
  int solved_at = -1;                   // first successful trial, -1 if never
};

struct ExperimentReport {
  std::string baseline;
  std::string env_id;
  int retries = 0;
  std::uint64_t seed = 0;
  std::uint64_t world_seed = 0;
  std::string config_hash;
  std::vector<double> success_rates;  // cumulative, trials 0..retries
  std::vector<TaskOutcome> outcomes;
  double wall_clock_seconds = 0.0;
};

// Trial 0 with empty memory, then up to `retries` retries, each preceded by
// one reflection on the previous failed trial. A solved task stays solved.
ExperimentReport evaluate(const AgentConfig& agent, const envs::Environment& env, std::span<const TaskSpec> tasks,
                          const ActorPolicy& actor, const TemplateLibrary& library, int retries,
                          std::uint64_t seed, int jobs = 1);

// Wall-clock time is left out unless asked for, so reports of identical runs
// are byte-identical.
std::string report_to_json(const ExperimentReport& report, bool include_wall_clock = false);

// The three baselines on the same tasks and seed. kCheckpointMissing when
// either trained checkpoint is absent.
std::vector<ExperimentReport> compare(const envs::Environment& env, std::span<const TaskSpec> tasks,
                                      const ActorPolicy& actor, const TemplateLibrary& library,
                                      const ExperimentConfig& cfg, const std::string& policy_path,
                                      const std::string& reward_model_path, std::uint64_t seed, int jobs = 1);

// Columns: baseline, trial, success_rate, n_tasks, seed.
std::string curves_csv(std::span<const ExperimentReport> reports);
std::string comparison_table(std::span<const ExperimentReport> reports);
std::string curves_svg(std::span<const ExperimentReport> reports);

}  // namespace retrospect
