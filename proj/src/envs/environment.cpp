#include <algorithm>
#include <cctype>

#include "retrospect/envs.hpp"

namespace retrospect::envs {

Environment::Environment(std::uint64_t world_seed, std::vector<TaskSpec> tasks)
    : world_seed_(world_seed), tasks_(std::move(tasks)) {}

std::vector<TaskSpec> Environment::tasks(std::string_view split) const {
  std::vector<TaskSpec> out;
  for (const auto& t : tasks_) {
    if (t.split == split) out.push_back(t);
  }
  return out;
}

const TaskSpec& Environment::task(std::string_view task_id) const {
  for (const auto& t : tasks_) {
    if (t.task_id == task_id) return t;
  }
  throw Error(ErrorKind::kTaskNotFound, std::string(id()) + " has no task " + std::string(task_id));
}

EnvState Environment::reset(const TaskSpec& task, std::uint64_t seed) const {
  if (task.env_id != id()) {
    throw Error(ErrorKind::kTaskNotFound,
                "task " + task.task_id + " belongs to " + task.env_id + ", not " + std::string(id()));
  }
  const TaskSpec& registered = this->task(task.task_id);
  EnvState state = initial_state(registered);
  state.env_id = std::string(id());
  state.task_id = registered.task_id;
  state.seed = seed;
  return state;
}

Transition Environment::step(const EnvState& state, std::string_view action) const {
  if (state.terminal) {
    throw Error(ErrorKind::kEpisodeOver, "episode for task " + state.task_id + " is over");
  }
  return transition(task(state.task_id), state, action);
}

double Environment::episode_return(const EnvState& state) const {
  return final_reward(task(state.task_id), state);
}

bool Environment::plans_behave(const TaskSpec& task) const {
  auto play = [&](const std::vector<std::string>& plan) {
    EnvState state = initial_state(task);
    state.env_id = std::string(id());
    state.task_id = task.task_id;
    for (int t = 0; t < default_max_steps() && !state.terminal; ++t) {
      const auto index = std::min<std::size_t>(static_cast<std::size_t>(t), plan.size() - 1);
      state = transition(task, state, plan[index]).state;
    }
    return std::pair{state.terminal, final_reward(task, state)};
  };
  if (task.gold_actions.empty() ||
      task.gold_actions.size() > static_cast<std::size_t>(default_max_steps())) {
    return false;
  }
  const auto [gold_terminal, gold_return] = play(task.gold_actions);
  if (!gold_terminal || gold_return < success_threshold()) return false;
  for (const auto& [mode, plan] : task.failure_actions) {
    if (plan.empty()) return false;
    if (play(plan).second >= success_threshold()) return false;
  }
  return true;
}

std::optional<std::pair<std::string, std::string>> parse_action(std::string_view action) {
  const std::string text = trim(action);
  const auto open = text.find('[');
  if (open == std::string::npos || open == 0 || text.back() != ']') return std::nullopt;
  const std::string name = text.substr(0, open);
  for (char c : name) {
    if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
  }
  std::string argument = text.substr(open + 1, text.size() - open - 2);
  if (argument.find(']') != std::string::npos || argument.find('[') != std::string::npos) {
    return std::nullopt;
  }
  return std::pair{name, trim(argument)};
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<FailureMode> failure_modes_for(std::string_view env_id) {
  using F = FailureMode;
  if (env_id == SynthQa::kId) {
    return {F::kNone, F::kPrematureFinish, F::kWrongEntity, F::kLoopRepeat, F::kMissedLookup};
  }
  if (env_id == SynthHouse::kId) {
    return {F::kNone, F::kPrematureFinish, F::kWrongEntity, F::kLoopRepeat, F::kMissedLookup};
  }
  if (env_id == SynthShop::kId) {
    return {F::kNone, F::kPrematureFinish, F::kWrongEntity, F::kLoopRepeat, F::kWrongOption};
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown environment " + std::string(env_id));
}

std::unique_ptr<Environment> make_environment(std::string_view env_id, std::uint64_t world_seed,
                                              int n_train, int n_validation) {
  if (n_train < 0 || n_validation < 0) {
    throw Error(ErrorKind::kInvalidArgument, "task counts must be non-negative");
  }
  if (env_id == SynthQa::kId) return SynthQa::generate(world_seed, n_train, n_validation);
  if (env_id == SynthHouse::kId) return SynthHouse::generate(world_seed, n_train, n_validation);
  if (env_id == SynthShop::kId) return SynthShop::generate(world_seed, n_train, n_validation);
  throw Error(ErrorKind::kInvalidArgument, "unknown environment " + std::string(env_id));
}

Trajectory rollout(const Environment& env, const TaskSpec& task, const ActorPolicy& actor,
                   std::span<const std::string> reflections, const RolloutOptions& options) {
  const int max_steps = options.max_steps > 0 ? options.max_steps : env.default_max_steps();

  Trajectory traj;
  traj.env_id = std::string(env.id());
  traj.task_id = task.task_id;
  traj.goal_text = task.goal_text;
  traj.trial_index = options.trial_index;

  EnvState state = env.reset(task, options.seed);
  for (int t = 1; t <= max_steps && !state.terminal; ++t) {
    std::string action;
    try {
      const ActorPrompt prompt = assemble_prompt(task.goal_text, traj.steps, reflections,
                                                 options.prompt_budget, state.observation_text);
      action = actor.act(prompt, task);
    } catch (const std::exception& e) {
      traj.final_observation = state.observation_text;
      throw RolloutAborted("actor failed at step " + std::to_string(t) + ": " + e.what(), std::move(traj));
    }
    if (trim(action).empty()) {
      traj.final_observation = state.observation_text;
      throw RolloutAborted("actor returned an empty action at step " + std::to_string(t), std::move(traj));
    }
    Transition next = env.step(state, action);
    traj.steps.push_back(Step{t, state.observation_text, action, next.reward});
    state = std::move(next.state);
  }
  traj.final_observation = state.observation_text;
  traj.terminated = state.terminal;
  traj.episode_return = env.episode_return(state);
  traj.success = traj.episode_return >= env.success_threshold();
  return traj;
}

}  // namespace retrospect::envs
