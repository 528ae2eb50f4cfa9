#include "retrospect/harness.hpp"

#include <chrono>
#include <cstdio>

#include <json.hpp>

#include "retrospect/parallel.hpp"
#include "retrospect/rng.hpp"
#include "retrospect/sampler.hpp"

namespace retrospect {

namespace {

constexpr std::uint64_t kEvalStream = 4;

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

TaskOutcome run_task(const AgentConfig& agent, const RetroPolicy& policy, const envs::Environment& env,
                     const TaskSpec& task, std::size_t task_index, const ActorPolicy& actor,
                     const TemplateLibrary& library, int retries, std::uint64_t seed) {
  TaskOutcome out;
  out.task_id = task.task_id;
  out.failure_mode = task.failure_mode;

  envs::RolloutOptions options;
  options.prompt_budget = agent.prompt_budget;
  options.seed = seed;

  std::vector<std::string> memory;
  for (int trial = 0; trial <= retries; ++trial) {
    options.trial_index = trial + 1;
    const Trajectory traj = envs::rollout(env, task, actor, memory, options);
    out.returns.push_back(traj.episode_return);
    if (traj.success) {
      out.solved_at = trial;
      break;
    }
    if (trial == retries || agent.baseline == Baseline::kNoReflection) continue;

    const ReflectionPrompt prompt = build_reflection_prompt(traj);
    const std::uint64_t draw_seed =
        derive_seed({seed, kEvalStream, task_index, static_cast<std::uint64_t>(trial)});
    if (agent.baseline == Baseline::kFrozenRetro) {
      const auto draw = sample_response(policy, prompt, library, agent.temperature, draw_seed);
      out.reflection_ids.push_back(draw.response_id);
      memory.push_back(draw.response_text);
    } else {
      const auto best = best_of_n(policy, *agent.reward_model, prompt, library, agent.best_of_n,
                                  agent.temperature, draw_seed);
      out.reflection_ids.push_back(best.response_id);
      memory.push_back(best.response_text);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Baseline baseline) {
  switch (baseline) {
    case Baseline::kNoReflection:
      return "no_reflection";
    case Baseline::kFrozenRetro:
      return "frozen_retro";
    case Baseline::kReinforcedRetro:
      return "reinforced_retro";
  }
  return "unknown";
}

std::optional<Baseline> parse_baseline(std::string_view name) {
  for (Baseline b : kAllBaselines) {
    if (to_string(b) == name) return b;
  }
  return std::nullopt;
}

AgentConfig make_agent(Baseline baseline, const ExperimentConfig& cfg, std::optional<RetroPolicy> policy,
                       std::optional<RewardModel> reward_model) {
  AgentConfig agent;
  agent.baseline = baseline;
  // Only the reinforced agent uses trained parameters.
  if (baseline == Baseline::kReinforcedRetro) {
    agent.policy = std::move(policy);
    agent.reward_model = std::move(reward_model);
  }
  agent.best_of_n = cfg.best_of_n;
  agent.temperature = cfg.eval_temperature;
  agent.prompt_budget = cfg.prompt_budget;
  return agent;
}

ExperimentReport evaluate(const AgentConfig& agent, const envs::Environment& env, std::span<const TaskSpec> tasks,
                          const ActorPolicy& actor, const TemplateLibrary& library, int retries,
                          std::uint64_t seed, int jobs) {
  if (retries < 1) throw Error(ErrorKind::kInvalidArgument, "retries must be >= 1");
  if (agent.baseline == Baseline::kReinforcedRetro && (!agent.policy || !agent.reward_model)) {
    throw Error(ErrorKind::kInvalidArgument, "reinforced_retro needs a trained policy and reward model");
  }
  const auto start = std::chrono::steady_clock::now();
  const RetroPolicy policy = agent.policy ? *agent.policy : RetroPolicy(library.size());

  ExperimentReport report;
  report.baseline = std::string(to_string(agent.baseline));
  report.env_id = std::string(env.id());
  report.retries = retries;
  report.seed = seed;
  report.world_seed = env.world_seed();
  report.outcomes.resize(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    try {
      report.outcomes[i] = run_task(agent, policy, env, tasks[i], i, actor, library, retries, seed);
    } catch (const Error& e) {
      throw Error(e.kind(), tasks[i].task_id + ": " + e.message(), e.stage());
    }
  });

  report.success_rates.assign(static_cast<std::size_t>(retries) + 1, 0.0);
  for (int t = 0; t <= retries; ++t) {
    std::size_t solved = 0;
    for (const auto& o : report.outcomes) {
      if (o.solved_at >= 0 && o.solved_at <= t) ++solved;
    }
    report.success_rates[static_cast<std::size_t>(t)] =
        tasks.empty() ? 0.0 : static_cast<double>(solved) / static_cast<double>(tasks.size());
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string report_to_json(const ExperimentReport& report, bool include_wall_clock) {
  nlohmann::ordered_json j;
  j["schema"] = "retrospect.report";
  j["version"] = 1;
  j["baseline"] = report.baseline;
  j["env_id"] = report.env_id;
  j["retries"] = report.retries;
  j["seed"] = report.seed;
  j["world_seed"] = report.world_seed;
  j["config_hash"] = report.config_hash;
  j["n_tasks"] = report.outcomes.size();
  j["success_rates"] = report.success_rates;
  auto& tasks = j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& o : report.outcomes) {
    tasks.push_back({{"task_id", o.task_id},
                     {"failure_mode", std::string(to_string(o.failure_mode))},
                     {"solved_at", o.solved_at},
                     {"returns", o.returns},
                     {"reflection_ids", o.reflection_ids}});
  }
  if (include_wall_clock) j["wall_clock_seconds"] = report.wall_clock_seconds;
  return j.dump(2) + "\n";
}

std::vector<ExperimentReport> compare(const envs::Environment& env, std::span<const TaskSpec> tasks,
                                      const ActorPolicy& actor, const TemplateLibrary& library,
                                      const ExperimentConfig& cfg, const std::string& policy_path,
                                      const std::string& reward_model_path, std::uint64_t seed, int jobs) {
  const RetroPolicy trained = load_policy(policy_path);
  const RewardModel rm = load_reward_model(reward_model_path);
  std::vector<ExperimentReport> reports;
  for (Baseline b : kAllBaselines) {
    const AgentConfig agent = b == Baseline::kReinforcedRetro ? make_agent(b, cfg, trained, rm) : make_agent(b, cfg);
    ExperimentReport r = evaluate(agent, env, tasks, actor, library, cfg.retries, seed, jobs);
    r.config_hash = config_hash(cfg);
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string curves_csv(std::span<const ExperimentReport> reports) {
  std::string out = "baseline,trial,success_rate,n_tasks,seed\n";
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < r.success_rates.size(); ++t) {
      out += r.baseline + "," + std::to_string(t) + "," + format_number(r.success_rates[t]) + "," +
             std::to_string(r.outcomes.size()) + "," + std::to_string(r.seed) + "\n";
    }
  }
  return out;
}

std::string comparison_table(std::span<const ExperimentReport> reports) {
  std::string out = "trial";
  for (const auto& r : reports) out += "  " + r.baseline;
  out += "\n";
  std::size_t trials = 0;
  for (const auto& r : reports) trials = std::max(trials, r.success_rates.size());
  for (std::size_t t = 0; t < trials; ++t) {
    std::string row = std::to_string(t);
    row.resize(5, ' ');
    out += row;
    for (const auto& r : reports) {
      std::string cell = t < r.success_rates.size() ? fixed(r.success_rates[t], 3) : "-";
      cell.insert(0, r.baseline.size() + 2 - std::min(cell.size(), r.baseline.size() + 2), ' ');
      out += cell;
    }
    out += "\n";
  }
  return out;
}

std::string curves_svg(std::span<const ExperimentReport> reports) {
  static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 170, kTop = 20, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  std::size_t trials = 1;
  for (const auto& r : reports) trials = std::max(trials, r.success_rates.size());
  const double x_step = trials > 1 ? plot_w / static_cast<double>(trials - 1) : 0.0;
  auto x_at = [&](std::size_t t) { return kLeft + x_step * static_cast<double>(t); };
  auto y_at = [&](double v) { return kTop + plot_h * (1.0 - v); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                    "font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    svg += "<line x1=\"" + fixed(kLeft, 1) + "\" y1=\"" + fixed(y_at(v), 1) + "\" x2=\"" + fixed(kLeft + plot_w, 1) +
           "\" y2=\"" + fixed(y_at(v), 1) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fixed(kLeft - 8, 1) + "\" y=\"" + fixed(y_at(v) + 4, 1) + "\" text-anchor=\"end\">" +
           fixed(v, 2) + "</text>\n";
  }
  for (std::size_t t = 0; t < trials; ++t) {
    svg += "<text x=\"" + fixed(x_at(t), 1) + "\" y=\"" + fixed(kTop + plot_h + 18, 1) +
           "\" text-anchor=\"middle\">" + std::to_string(t) + "</text>\n";
  }
  svg += "<text x=\"" + fixed(kLeft + plot_w / 2, 1) + "\" y=\"" + fixed(kHeight - 10, 1) +
         "\" text-anchor=\"middle\">trial</text>\n";
  svg += "<text x=\"15\" y=\"" + fixed(kTop + plot_h / 2, 1) + "\" transform=\"rotate(-90 15 " +
         fixed(kTop + plot_h / 2, 1) + ")\" text-anchor=\"middle\">success rate</text>\n";

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const char* color = kColors[i % std::size(kColors)];
    std::string points;
    for (std::size_t t = 0; t < r.success_rates.size(); ++t) {
      if (!points.empty()) points += " ";
      points += fixed(x_at(t), 1) + "," + fixed(y_at(r.success_rates[t]), 1);
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + points +
           "\"/>\n";
    const double ly = kTop + 20.0 * static_cast<double>(i + 1);
    svg += "<line x1=\"" + fixed(kWidth - kRight + 15, 1) + "\" y1=\"" + fixed(ly, 1) + "\" x2=\"" +
           fixed(kWidth - kRight + 35, 1) + "\" y2=\"" + fixed(ly, 1) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fixed(kWidth - kRight + 40, 1) + "\" y=\"" + fixed(ly + 4, 1) + "\">" + r.baseline +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace retrospect
