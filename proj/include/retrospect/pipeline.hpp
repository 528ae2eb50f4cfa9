#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "retrospect/actor.hpp"
#include "retrospect/buffer.hpp"
#include "retrospect/config.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/retro.hpp"
#include "retrospect/rlhf.hpp"

namespace retrospect {

struct CollectStats {
  std::size_t tasks = 0;
  std::size_t failed_tasks = 0;  // failed their first trial
  std::size_t groups = 0;
  std::size_t records = 0;
};

// Offline data collection. Each task is rolled out for up to
// cfg.collection_trials trials. After every failed trial two reflections are
// sampled at cfg.collection_temperature, both are rolled out as the next
// trial, and one record per reflection is appended; the chain continues with
// the first reflection. The whole pass is repeated cfg.collection_rounds
// times with fresh samples. Records are appended round by round in task
// order.
CollectStats collect(const envs::Environment& env, std::span<const TaskSpec> tasks, const ActorPolicy& actor,
                     const RetroPolicy& policy, const TemplateLibrary& library, const ExperimentConfig& cfg,
                     std::uint64_t seed, ReplayBuffer& buffer, int jobs = 1);

struct RewardStage {
  RewardModel model;
  std::size_t pairs = 0;
  std::size_t ties = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

// Preferences plus reward-model fit; kEmptyBuffer when there is nothing to
// learn from.
RewardStage train_reward_stage(std::span<const ReflectionRecord> records, std::size_t num_templates,
                               const ExperimentConfig& cfg);

struct PolicyStage {
  RetroPolicy policy;
  std::size_t sft_records = 0;
  double sft_loss_before = 0.0;
  double sft_loss_after = 0.0;
  std::vector<PpoDiagnostics> ppo_history;
};

// SFT warm start on the positive records from the uniform policy, then
// cfg.ppo.max_steps PPO steps anchored to the SFT policy. Each step draws
// instructions from the records and fresh responses from the current policy.
PolicyStage train_policy_stage(std::span<const ReflectionRecord> records, const RewardModel& rm,
                               std::size_t num_templates, const ExperimentConfig& cfg, std::uint64_t seed);

struct PipelineOptions {
  std::string out_dir;      // checkpoints and manifest; empty writes nothing
  std::string buffer_path;  // empty keeps the buffer in memory
  int jobs = 1;
};

struct PipelineResult {
  RetroPolicy policy;
  RewardModel reward_model;
  CollectStats collect;
  std::string manifest;  // JSON
};

// Collection, reward model, SFT and PPO on the training split. Failures are
// rethrown with the stage tag collect, reward_model, sft or ppo.
PipelineResult run_pipeline(const envs::Environment& env, const ActorPolicy& actor, const TemplateLibrary& library,
                            const ExperimentConfig& cfg, std::uint64_t seed, const PipelineOptions& options = {});

}  // namespace retrospect
