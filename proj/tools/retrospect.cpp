// retrospect: collect reflection data, train the reward model and the
// retrospective policy, evaluate and compare baselines.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "retrospect/actor.hpp"
#include "retrospect/buffer.hpp"
#include "retrospect/config.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/harness.hpp"
#include "retrospect/pipeline.hpp"
#include "retrospect/remote_actor.hpp"
#include "retrospect/retro.hpp"
#include "retrospect/rlhf.hpp"
#include "retrospect/templates.hpp"

using namespace retrospect;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string config_path;
  std::string buffer_path = "replay.jsonl";
  int jobs = 1;
  std::string tasks_path;
  std::string templates_path;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--config", c.config_path, "Key-value config file");
  cmd->add_option("--buffer", c.buffer_path, "Replay buffer (JSONL)");
  cmd->add_option("--jobs", c.jobs, "Concurrent tasks")->check(CLI::PositiveNumber);
  cmd->add_option("--tasks", c.tasks_path, "Task-set fixture (default: generated from config)");
  cmd->add_option("--templates", c.templates_path, "Template library fixture (default: built in)");
}

struct Context {
  ExperimentConfig cfg;
  std::unique_ptr<envs::Environment> env;
  TemplateLibrary library = TemplateLibrary::standard();
  std::unique_ptr<ActorPolicy> actor;
};

Context load_context(const Common& c) {
  Context ctx;
  if (!c.config_path.empty()) ctx.cfg = load_config(c.config_path);
  if (!c.templates_path.empty()) ctx.library = TemplateLibrary::load(c.templates_path);
  ctx.env = c.tasks_path.empty() ? envs::make_environment(ctx.cfg.env, ctx.cfg.world_seed, ctx.cfg.n_train,
                                                          ctx.cfg.n_validation)
                                 : envs::load_task_set(c.tasks_path);
  if (ctx.cfg.actor == "remote") {
    RemoteConfig rc;
    rc.endpoint = ctx.cfg.remote_endpoint;
    rc.model = ctx.cfg.remote_model;
    ctx.actor = std::make_unique<RemoteActor>(remote_config_from_env(rc));
  } else {
    ctx.actor = std::make_unique<ScriptedActor>(ctx.library);
  }
  return ctx;
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::kPersistFailed, "cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrospective reflection training and evaluation"};
  app.require_subcommand(1);

  Common common;
  std::string rm_path = "reward_model.ckpt";
  std::string policy_path = "policy.ckpt";
  std::string report_path;
  std::string csv_path;
  std::string plot_path;
  std::string manifest_path;
  std::string out_dir = "run";
  std::string baseline_name = "reinforced_retro";
  std::string split = "validation";
  std::string what;
  std::string out_path;
  bool wall_clock = false;

  auto* collect_cmd = app.add_subcommand("collect", "Roll out training tasks and fill the replay buffer");
  add_common(collect_cmd, common);

  auto* rm_cmd = app.add_subcommand("train-rm", "Fit the reward model on buffer preferences");
  add_common(rm_cmd, common);
  rm_cmd->add_option("--out", rm_path, "Reward-model checkpoint to write");

  auto* ppo_cmd = app.add_subcommand("train-ppo", "SFT warm start and PPO fine-tuning");
  add_common(ppo_cmd, common);
  ppo_cmd->add_option("--reward-model", rm_path, "Reward-model checkpoint");
  ppo_cmd->add_option("--out", policy_path, "Policy checkpoint to write");
  ppo_cmd->add_option("--manifest", manifest_path, "Write training metrics as JSON");

  auto* eval_cmd = app.add_subcommand("evaluate", "Run the retry loop for one baseline");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--baseline", baseline_name, "no_reflection | frozen_retro | reinforced_retro");
  eval_cmd->add_option("--policy", policy_path, "Policy checkpoint");
  eval_cmd->add_option("--reward-model", rm_path, "Reward-model checkpoint");
  eval_cmd->add_option("--split", split, "Task split");
  eval_cmd->add_option("--report", report_path, "Write the report JSON here");
  eval_cmd->add_flag("--wall-clock", wall_clock, "Include wall-clock time in the report");

  auto* compare_cmd = app.add_subcommand("compare", "Evaluate all baselines and emit curves");
  add_common(compare_cmd, common);
  compare_cmd->add_option("--policy", policy_path, "Policy checkpoint");
  compare_cmd->add_option("--reward-model", rm_path, "Reward-model checkpoint");
  compare_cmd->add_option("--split", split, "Task split");
  compare_cmd->add_option("--csv", csv_path, "Write curves CSV here");
  compare_cmd->add_option("--plot", plot_path, "Write an SVG plot here");

  auto* export_cmd = app.add_subcommand("export", "Write fixtures: tasks, templates or config");
  add_common(export_cmd, common);
  export_cmd->add_option("what", what, "tasks | templates | config")->required();
  export_cmd->add_option("--out", out_path, "Output path (default: stdout)");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "collect, train-rm and train-ppo in one go");
  add_common(pipeline_cmd, common);
  pipeline_cmd->add_option("--out-dir", out_dir, "Directory for checkpoints and manifest");

  CLI11_PARSE(app, argc, argv);

  try {
    Context ctx = load_context(common);
    const std::size_t K = ctx.library.size();

    if (collect_cmd->parsed()) {
      ReplayBuffer buffer(common.buffer_path);
      const auto train = ctx.env->tasks("train");
      const CollectStats s = collect(*ctx.env, train, *ctx.actor, RetroPolicy(K), ctx.library, ctx.cfg, common.seed,
                                     buffer, common.jobs);
      std::printf("collected %zu records from %zu groups (%zu of %zu tasks failed trial 1) into %s\n", s.records,
                  s.groups, s.failed_tasks, s.tasks, common.buffer_path.c_str());
    } else if (rm_cmd->parsed()) {
      const auto records = read_buffer(common.buffer_path);
      const RewardStage stage = train_reward_stage(records, K, ctx.cfg);
      save_reward_model(stage.model, rm_path);
      std::printf("reward model: %zu pairs, %zu ties, loss %.6f, accuracy %.4f -> %s\n", stage.pairs, stage.ties,
                  stage.loss, stage.accuracy, rm_path.c_str());
    } else if (ppo_cmd->parsed()) {
      const auto records = read_buffer(common.buffer_path);
      const RewardModel rm = load_reward_model(rm_path);
      const PolicyStage stage = train_policy_stage(records, rm, K, ctx.cfg, common.seed);
      save_policy(stage.policy, policy_path);
      const PpoDiagnostics last = stage.ppo_history.empty() ? PpoDiagnostics{} : stage.ppo_history.back();
      std::printf("sft: %zu records, loss %.6f -> %.6f\n", stage.sft_records, stage.sft_loss_before,
                  stage.sft_loss_after);
      std::printf("ppo: %zu steps, mean ratio %.6f, mean kl %.6f, mean score %.6f -> %s\n", stage.ppo_history.size(),
                  last.mean_ratio, last.mean_kl, last.mean_score, policy_path.c_str());
      if (!manifest_path.empty()) {
        std::string json = "{\n  \"seed\": " + std::to_string(common.seed) + ",\n  \"config_hash\": \"" +
                           config_hash(ctx.cfg) + "\",\n  \"sft_records\": " + std::to_string(stage.sft_records) +
                           ",\n  \"ppo_steps\": " + std::to_string(stage.ppo_history.size()) +
                           ",\n  \"final_mean_kl\": " + format_exact(last.mean_kl) + "\n}\n";
        write_file(manifest_path, json);
      }
    } else if (eval_cmd->parsed()) {
      const auto baseline = parse_baseline(baseline_name);
      if (!baseline) throw Error(ErrorKind::kInvalidArgument, "unknown baseline " + baseline_name);
      AgentConfig agent = make_agent(*baseline, ctx.cfg);
      if (*baseline == Baseline::kReinforcedRetro) {
        agent = make_agent(*baseline, ctx.cfg, load_policy(policy_path), load_reward_model(rm_path));
      }
      const auto tasks = ctx.env->tasks(split);
      ExperimentReport report =
          evaluate(agent, *ctx.env, tasks, *ctx.actor, ctx.library, ctx.cfg.retries, common.seed, common.jobs);
      report.config_hash = config_hash(ctx.cfg);
      const std::vector<ExperimentReport> one{report};
      std::fputs(comparison_table(one).c_str(), stdout);
      if (!report_path.empty()) write_file(report_path, report_to_json(report, wall_clock));
    } else if (compare_cmd->parsed()) {
      const auto tasks = ctx.env->tasks(split);
      const auto reports = compare(*ctx.env, tasks, *ctx.actor, ctx.library, ctx.cfg, policy_path, rm_path,
                                   common.seed, common.jobs);
      std::fputs(comparison_table(reports).c_str(), stdout);
      if (!csv_path.empty()) write_file(csv_path, curves_csv(reports));
      if (!plot_path.empty()) write_file(plot_path, curves_svg(reports));
    } else if (export_cmd->parsed()) {
      std::string text;
      if (what == "tasks") {
        text = envs::task_set_to_json(*ctx.env);
      } else if (what == "templates") {
        text = ctx.library.to_json();
      } else if (what == "config") {
        text = canonical_config(ctx.cfg);
      } else {
        throw Error(ErrorKind::kInvalidArgument, "export what: tasks, templates or config");
      }
      if (out_path.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        write_file(out_path, text);
      }
    } else if (pipeline_cmd->parsed()) {
      PipelineOptions options;
      options.out_dir = out_dir;
      options.buffer_path = common.buffer_path;
      options.jobs = common.jobs;
      const PipelineResult result = run_pipeline(*ctx.env, *ctx.actor, ctx.library, ctx.cfg, common.seed, options);
      std::fputs(result.manifest.c_str(), stdout);
    }
  } catch (const Error& e) {
    if (e.stage().empty()) {
      std::fprintf(stderr, "error: %s\n", e.what());
    } else {
      std::fprintf(stderr, "error in stage %s: %s\n", e.stage().c_str(), e.what());
    }
    return 1;
  }
  return 0;
}
