#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "retrospect/actor.hpp"
#include "retrospect/config.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/harness.hpp"
#include "retrospect/pipeline.hpp"

using namespace retrospect;
namespace fs = std::filesystem;

namespace {

struct Trained {
  ExperimentConfig cfg;
  std::unique_ptr<envs::Environment> env;
  PipelineResult result;
};

const Trained& trained() {
  static const Trained t = [] {
    ExperimentConfig cfg;
    auto env = envs::make_environment("synthqa", cfg.world_seed, cfg.n_train, cfg.n_validation);
    const ScriptedActor actor;
    PipelineResult r = run_pipeline(*env, actor, actor.library(), cfg, 1);
    return Trained{cfg, std::move(env), std::move(r)};
  }();
  return t;
}

bool monotone(const std::vector<double>& curve) {
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i] < curve[i - 1]) return false;
  }
  return true;
}

}  // namespace

TEST(Evaluate, AllNoneTasksSucceedAtTrialZero) {
  const auto base = envs::make_environment("synthhouse", 1, 10, 10);
  std::vector<TaskSpec> tasks = base->tasks();
  for (auto& t : tasks) t.failure_mode = FailureMode::kNone;
  const envs::SynthHouse env(1, tasks);
  const ScriptedActor actor;
  const ExperimentConfig cfg;
  for (Baseline b : {Baseline::kNoReflection, Baseline::kFrozenRetro}) {
    const auto report = evaluate(make_agent(b, cfg), env, env.tasks("validation"), actor, actor.library(), 4, 1);
    EXPECT_EQ(report.success_rates.front(), 1.0);
    for (const auto& o : report.outcomes) {
      EXPECT_EQ(o.solved_at, 0);
      EXPECT_EQ(o.returns.size(), 1u);
    }
  }
}

TEST(Evaluate, NoReflectionIsFlatAndMatchesTheModeMix) {
  const ScriptedActor actor;
  const ExperimentConfig cfg;
  for (std::string_view id : envs::kEnvironmentIds) {
    const auto env = envs::make_environment(id, 1);
    const auto tasks = env->tasks("validation");
    const auto report = evaluate(make_agent(Baseline::kNoReflection, cfg), *env, tasks, actor, actor.library(), 4, 1);
    ASSERT_EQ(report.success_rates.size(), 5u);
    std::size_t none = 0;
    for (const auto& t : tasks) none += t.failure_mode == FailureMode::kNone;
    for (double r : report.success_rates) EXPECT_DOUBLE_EQ(r, static_cast<double>(none) / tasks.size());
  }
}

TEST(Evaluate, CurvesAreMonotoneAndOutcomesConsistent) {
  const auto& t = trained();
  const ScriptedActor actor;
  const auto tasks = t.env->tasks("validation");
  for (Baseline b : kAllBaselines) {
    const auto report = evaluate(make_agent(b, t.cfg, t.result.policy, t.result.reward_model), *t.env, tasks, actor,
                                 actor.library(), 4, 5);
    EXPECT_TRUE(monotone(report.success_rates)) << to_string(b);
    // Recompute the curve from the outcome matrix.
    for (std::size_t trial = 0; trial < report.success_rates.size(); ++trial) {
      std::size_t solved = 0;
      for (const auto& o : report.outcomes) solved += o.solved_at >= 0 && static_cast<std::size_t>(o.solved_at) <= trial;
      EXPECT_DOUBLE_EQ(report.success_rates[trial], static_cast<double>(solved) / tasks.size());
    }
    for (const auto& o : report.outcomes) {
      if (o.solved_at >= 0) {
        EXPECT_EQ(o.returns.size(), static_cast<std::size_t>(o.solved_at) + 1);
        EXPECT_GE(o.returns.back(), 1.0);
      } else {
        EXPECT_EQ(o.returns.size(), 5u);
      }
      EXPECT_EQ(o.reflection_ids.size(), b == Baseline::kNoReflection ? 0u : o.returns.size() - 1);
    }
  }
}

TEST(Evaluate, ReinforcedImprovesFromTrialZeroToOne) {
  const auto& t = trained();
  const ScriptedActor actor;
  const auto report = evaluate(make_agent(Baseline::kReinforcedRetro, t.cfg, t.result.policy, t.result.reward_model),
                               *t.env, t.env->tasks("validation"), actor, actor.library(), 4, 1);
  EXPECT_GT(report.success_rates[1], report.success_rates[0]);
}

// A run with one retry is the first two points of a longer run with the same
// seed; its trial-0 point is the trial-0-only evaluation of the config.
TEST(Evaluate, ShorterRunsArePrefixes) {
  const auto& t = trained();
  const ScriptedActor actor;
  const auto tasks = t.env->tasks("validation");
  for (Baseline b : kAllBaselines) {
    const auto agent = make_agent(b, t.cfg, t.result.policy, t.result.reward_model);
    const auto one = evaluate(agent, *t.env, tasks, actor, actor.library(), 1, 9);
    const auto four = evaluate(agent, *t.env, tasks, actor, actor.library(), 4, 9);
    ASSERT_EQ(one.success_rates.size(), 2u);
    EXPECT_EQ(one.success_rates[0], four.success_rates[0]);
    EXPECT_EQ(one.success_rates[1], four.success_rates[1]);
  }
}

TEST(Evaluate, ParallelMatchesSerial) {
  const auto& t = trained();
  const ScriptedActor actor;
  const auto agent = make_agent(Baseline::kReinforcedRetro, t.cfg, t.result.policy, t.result.reward_model);
  const auto tasks = t.env->tasks("validation");
  const auto serial = evaluate(agent, *t.env, tasks, actor, actor.library(), 4, 3, 1);
  const auto parallel = evaluate(agent, *t.env, tasks, actor, actor.library(), 4, 3, 8);
  EXPECT_EQ(report_to_json(serial), report_to_json(parallel));
}

TEST(Evaluate, FrozenBeatsNoReflectionOverSeeds) {
  const ScriptedActor actor;
  const ExperimentConfig cfg;
  double frozen = 0.0, none = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto env = envs::make_environment("synthqa", seed);
    const auto tasks = env->tasks("validation");
    frozen += evaluate(make_agent(Baseline::kFrozenRetro, cfg), *env, tasks, actor, actor.library(), 4, seed)
                  .success_rates.back();
    none += evaluate(make_agent(Baseline::kNoReflection, cfg), *env, tasks, actor, actor.library(), 4, seed)
                .success_rates.back();
  }
  EXPECT_GE(frozen, none);
}

TEST(Evaluate, ArgumentErrors) {
  const auto env = envs::make_environment("synthqa", 1);
  const ScriptedActor actor;
  const ExperimentConfig cfg;
  const auto tasks = env->tasks("validation");
  try {
    evaluate(make_agent(Baseline::kFrozenRetro, cfg), *env, tasks, actor, actor.library(), 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
  EXPECT_THROW(evaluate(make_agent(Baseline::kReinforcedRetro, cfg), *env, tasks, actor, actor.library(), 4, 1),
               Error);
}

TEST(Report, JsonShapeAndWallClockOptIn) {
  const auto env = envs::make_environment("synthqa", 1);
  const ScriptedActor actor;
  const ExperimentConfig cfg;
  auto report = evaluate(make_agent(Baseline::kFrozenRetro, cfg), *env, env->tasks("validation"), actor,
                         actor.library(), 4, 2);
  report.config_hash = config_hash(cfg);
  const auto j = nlohmann::json::parse(report_to_json(report));
  EXPECT_EQ(j["schema"], "retrospect.report");
  EXPECT_EQ(j["baseline"], "frozen_retro");
  EXPECT_EQ(j["success_rates"].size(), 5u);
  EXPECT_EQ(j["tasks"].size(), 30u);
  EXPECT_EQ(j["n_tasks"], 30);
  EXPECT_FALSE(j.contains("wall_clock_seconds"));
  EXPECT_TRUE(nlohmann::json::parse(report_to_json(report, true)).contains("wall_clock_seconds"));
}

TEST(Compare, MissingCheckpoint) {
  const auto env = envs::make_environment("synthqa", 1);
  const ScriptedActor actor;
  try {
    compare(*env, env->tasks("validation"), actor, actor.library(), ExperimentConfig{}, "/nonexistent/policy.ckpt",
            "/nonexistent/rm.ckpt", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCheckpointMissing);
  }
}

TEST(Compare, CsvHasOneRowPerTrialAndBaseline) {
  const auto& t = trained();
  const fs::path dir = fs::temp_directory_path() / "retrospect_compare_test";
  fs::create_directories(dir);
  save_policy(t.result.policy, (dir / "policy.ckpt").string());
  save_reward_model(t.result.reward_model, (dir / "rm.ckpt").string());
  const ScriptedActor actor;
  const auto reports = compare(*t.env, t.env->tasks("validation"), actor, actor.library(), t.cfg,
                               (dir / "policy.ckpt").string(), (dir / "rm.ckpt").string(), 1);
  ASSERT_EQ(reports.size(), 3u);
  const std::string csv = curves_csv(reports);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "baseline,trial,success_rate,n_tasks,seed");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  EXPECT_EQ(rows, (t.cfg.retries + 1) * 3);
  EXPECT_NE(comparison_table(reports).find("reinforced_retro"), std::string::npos);
  EXPECT_EQ(curves_svg(reports).rfind("<svg", 0), 0u);
  fs::remove_all(dir);
}

TEST(Baselines, NamesRoundTrip) {
  for (Baseline b : kAllBaselines) EXPECT_EQ(parse_baseline(to_string(b)), b);
  EXPECT_FALSE(parse_baseline("oracle"));
}

TEST(Config, ParsesCommentsAndRejectsUnknownKeys) {
  const auto cfg = parse_config("# comment\nenv = synthshop\nretries=2  # trailing\n\nbeta_kl = 0.5\n");
  EXPECT_EQ(cfg.env, "synthshop");
  EXPECT_EQ(cfg.retries, 2);
  EXPECT_EQ(cfg.ppo.beta_kl, 0.5);
  EXPECT_THROW(parse_config("colour = blue\n"), Error);
  EXPECT_THROW(parse_config("retries = many\n"), Error);
  EXPECT_THROW(parse_config("env = moon\n"), Error);
  EXPECT_THROW(parse_config("clip_epsilon = 1.5\n"), Error);
}

TEST(Config, CanonicalFormRoundTrips) {
  ExperimentConfig cfg;
  cfg.collection_temperature = 0.1 + 0.2;
  cfg.remote_model = "other";
  const auto back = parse_config(canonical_config(cfg));
  EXPECT_EQ(canonical_config(back), canonical_config(cfg));
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  EXPECT_EQ(config_hash(cfg).size(), 16u);
}

TEST(Config, HashChangesWithEveryField) {
  const ExperimentConfig base;
  const std::string h0 = config_hash(base);
  std::set<std::string> seen{h0};
  const auto entries = config_entries(base);
  EXPECT_EQ(entries.size(), 24u);
  for (const auto& [key, value] : entries) {
    std::string changed;
    if (key == "env") changed = "synthhouse";
    else if (key == "actor") changed = "remote";
    else if (key == "remote_endpoint") changed = "http://127.0.0.1:1/x";
    else if (key == "remote_model") changed = "gpt-3.5";
    else if (key == "clip_epsilon") changed = "0.3";
    else if (value.find('.') != std::string::npos) changed = format_exact(std::stod(value) * 1.5);
    else changed = std::to_string(std::stoll(value) + 1);
    const auto cfg = parse_config(key + " = " + changed + "\n");
    EXPECT_TRUE(seen.insert(config_hash(cfg)).second) << key;
    EXPECT_EQ(config_hash(parse_config(key + " = " + value + "\n")), h0) << key;
  }
}

TEST(Agents, FrozenIgnoresTrainedParameters) {
  const auto& t = trained();
  const auto frozen = make_agent(Baseline::kFrozenRetro, t.cfg, t.result.policy, t.result.reward_model);
  EXPECT_FALSE(frozen.policy.has_value());
  EXPECT_FALSE(frozen.reward_model.has_value());
  EXPECT_TRUE(make_agent(Baseline::kReinforcedRetro, t.cfg, t.result.policy, t.result.reward_model).policy.has_value());
}
