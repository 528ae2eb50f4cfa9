#include "retrospect/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "retrospect/checkpoint.hpp"
#include "retrospect/parallel.hpp"
#include "retrospect/rng.hpp"

namespace retrospect {

namespace {

// Stream tags keep the random streams of different stages apart.
constexpr std::uint64_t kCollectStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kResponseStream = 3;

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), e.message(), stage);
  }
}

std::vector<ReflectionRecord> collect_task(const envs::Environment& env, const TaskSpec& task, std::size_t task_index,
                                           std::uint64_t round, const ActorPolicy& actor, const RetroPolicy& policy,
                                           const TemplateLibrary& library, const ExperimentConfig& cfg,
                                           std::uint64_t seed) {
  envs::RolloutOptions options;
  options.prompt_budget = cfg.prompt_budget;
  options.seed = seed;
  options.trial_index = 1;

  std::vector<std::string> memory;
  std::vector<ReflectionRecord> records;
  Trajectory current = envs::rollout(env, task, actor, memory, options);
  for (int trial = 1; trial < cfg.collection_trials && !current.success; ++trial) {
    const ReflectionPrompt prompt = build_reflection_prompt(current);
    const FeatureVector features = extract_features(prompt.rendered);
    options.trial_index = trial + 1;

    Trajectory first;
    for (std::uint64_t j = 0; j < 2; ++j) {
      const auto draw = sample_response(policy, prompt, library, cfg.collection_temperature,
                                        derive_seed({seed, kCollectStream, round, task_index,
                                                     static_cast<std::uint64_t>(trial), j}));
      std::vector<std::string> with = memory;
      with.push_back(draw.response_text);
      Trajectory next = envs::rollout(env, task, actor, with, options);
      records.push_back(make_record(current, next, prompt.rendered, draw.response_id, draw.response_text,
                                    log_prob(policy, features, draw.response_id)));
      if (j == 0) {
        first = std::move(next);
        memory = std::move(with);
      }
    }
    current = std::move(first);
  }
  return records;
}

}  // namespace

CollectStats collect(const envs::Environment& env, std::span<const TaskSpec> tasks, const ActorPolicy& actor,
                     const RetroPolicy& policy, const TemplateLibrary& library, const ExperimentConfig& cfg,
                     std::uint64_t seed, ReplayBuffer& buffer, int jobs) {
  CollectStats stats;
  stats.tasks = tasks.size();
  const auto rounds = static_cast<std::size_t>(cfg.collection_rounds);
  // Slot r * n + i holds round r of task i; appending in slot order keeps the
  // buffer independent of scheduling.
  std::vector<std::vector<ReflectionRecord>> slots(rounds * tasks.size());
  parallel_for(slots.size(), jobs, [&](std::size_t k) {
    const std::size_t i = k % tasks.size();
    try {
      slots[k] = collect_task(env, tasks[i], i, k / tasks.size(), actor, policy, library, cfg, seed);
    } catch (const Error& e) {
      throw Error(e.kind(), tasks[i].task_id + ": " + e.message());
    }
  });
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (k < tasks.size() && !slots[k].empty()) ++stats.failed_tasks;
    stats.groups += slots[k].size() / 2;
    stats.records += slots[k].size();
    buffer.append(slots[k]);
  }
  return stats;
}

RewardStage train_reward_stage(std::span<const ReflectionRecord> records, std::size_t num_templates,
                               const ExperimentConfig& cfg) {
  if (records.empty()) throw Error(ErrorKind::kEmptyBuffer, "replay buffer is empty");
  const PreferenceSet prefs = build_preferences(records);
  RewardFit fit = fit_reward_model(prefs.pairs, num_templates, cfg.rm_learning_rate, cfg.rm_steps);
  return {std::move(fit.model), prefs.pairs.size(), prefs.ties, fit.loss, fit.accuracy};
}

PolicyStage train_policy_stage(std::span<const ReflectionRecord> records, const RewardModel& rm,
                               std::size_t num_templates, const ExperimentConfig& cfg, std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorKind::kEmptyBuffer, "replay buffer is empty");
  cfg.ppo.validate();

  std::vector<ReflectionRecord> positives;
  for (const auto& r : records) {
    if (r.rating > 0.0) positives.push_back(r);
  }
  PolicyStage out{RetroPolicy(num_templates), 0, 0.0, 0.0, {}};
  out.sft_records = positives.size();
  RetroPolicy warm(num_templates);
  if (!positives.empty()) {
    out.sft_loss_before = sft_loss(warm, positives);
    warm = in_stage("sft", [&] { return sft_warm_start(warm, positives, cfg.sft_epochs, cfg.sft_learning_rate); });
    out.sft_loss_after = sft_loss(warm, positives);
  }
  std::vector<double> theta(warm.theta().begin(), warm.theta().end());
  RetroPolicy policy(theta, theta, num_templates);

  in_stage("ppo", [&] {
    const auto batch_size = static_cast<std::size_t>(cfg.ppo.batch_size);
    for (int step = 0; step < cfg.ppo.max_steps; ++step) {
      const auto s = static_cast<std::uint64_t>(step);
      const auto drawn = sample_batch(records, RatingFilter::kAny, batch_size, derive_seed({seed, kBatchStream, s}));
      std::vector<PpoSample> batch;
      batch.reserve(drawn.size());
      for (std::size_t b = 0; b < drawn.size(); ++b) {
        const FeatureVector features = extract_features(drawn[b].instruction);
        const TemplateDraw y = sample_template(policy, features, 1.0, derive_seed({seed, kResponseStream, s, b}));
        batch.push_back({features, y.response_id, y.logprob});
      }
      PpoResult result = ppo_step(policy, rm, std::span<const PpoSample>(batch), cfg.ppo);
      policy = std::move(result.policy);
      out.ppo_history.push_back(result.diagnostics);
    }
    return 0;
  });
  out.policy = std::move(policy);
  return out;
}

PipelineResult run_pipeline(const envs::Environment& env, const ActorPolicy& actor, const TemplateLibrary& library,
                            const ExperimentConfig& cfg, std::uint64_t seed, const PipelineOptions& options) {
  const auto train = env.tasks("train");
  const std::size_t K = library.size();

  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);
  ReplayBuffer buffer(options.buffer_path);
  const CollectStats stats = in_stage("collect", [&] {
    return collect(env, train, actor, RetroPolicy(K), library, cfg, seed, buffer, options.jobs);
  });
  const auto records = buffer.records();

  RewardStage rm = in_stage("reward_model", [&] { return train_reward_stage(records, K, cfg); });
  PolicyStage ps = train_policy_stage(records, rm.model, K, cfg, seed);

  nlohmann::ordered_json m;
  m["schema"] = "retrospect.manifest";
  m["version"] = 1;
  m["seed"] = seed;
  m["config_hash"] = config_hash(cfg);
  nlohmann::ordered_json config;
  for (const auto& [k, v] : config_entries(cfg)) config[k] = v;
  m["config"] = config;
  m["stages"]["collect"] = {{"tasks", stats.tasks},
                            {"failed_tasks", stats.failed_tasks},
                            {"groups", stats.groups},
                            {"records", stats.records}};
  m["stages"]["reward_model"] = {
      {"pairs", rm.pairs}, {"ties", rm.ties}, {"loss", rm.loss}, {"accuracy", rm.accuracy}};
  m["stages"]["sft"] = {{"records", ps.sft_records},
                        {"loss_before", ps.sft_loss_before},
                        {"loss_after", ps.sft_loss_after}};
  nlohmann::ordered_json ppo = {{"steps", ps.ppo_history.size()}};
  if (!ps.ppo_history.empty()) {
    const auto& last = ps.ppo_history.back();
    ppo["final"] = {{"mean_ratio", last.mean_ratio},
                    {"mean_kl", last.mean_kl},
                    {"surrogate", last.surrogate},
                    {"mean_score", last.mean_score},
                    {"clipped_fraction", last.clipped_fraction}};
  }
  m["stages"]["ppo"] = ppo;

  PipelineResult result{std::move(ps.policy), std::move(rm.model), stats, m.dump(2) + "\n"};
  if (!options.out_dir.empty()) {
    const std::filesystem::path dir(options.out_dir);
    save_reward_model(result.reward_model, (dir / "reward_model.ckpt").string());
    save_policy(result.policy, (dir / "policy.ckpt").string());
    std::ofstream((dir / "manifest.json").string(), std::ios::binary) << result.manifest;
  }
  return result;
}

}  // namespace retrospect
