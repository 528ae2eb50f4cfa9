#include "retrospect/actor.hpp"

#include <algorithm>

namespace retrospect {

namespace {

constexpr const char* kPreamble =
    "You are an agent solving a text task. Respond with exactly one action per turn.\n";

std::string elision_marker(std::size_t n) {
  return "[" + std::to_string(n) + " earlier steps elided]\n";
}

}  // namespace

std::string render_step(const Step& step) {
  const std::string t = std::to_string(step.timestep);
  return "Observation " + t + ": " + step.state_text + "\nAction " + t + ": " + step.action_text +
         "\nReward " + t + ": " + format_number(step.reward) + "\n";
}

ActorPrompt assemble_prompt(const std::string& goal, std::span<const Step> history,
                            std::span<const std::string> reflections, std::size_t budget,
                            const std::string& current_observation) {
  ActorPrompt prompt;
  prompt.goal_text = goal;
  prompt.long_term.assign(reflections.begin(), reflections.end());
  prompt.current_observation = current_observation;
  prompt.step_count = history.size();

  std::string head = std::string(kPreamble) + "Goal: " + goal + "\n";
  for (const auto& r : reflections) head += "Reflection: " + r + "\n";
  std::string tail;
  if (!current_observation.empty()) {
    tail = "Current observation: " + current_observation + "\nNext action:";
  }

  std::vector<std::string> entries;
  entries.reserve(history.size());
  for (const auto& step : history) entries.push_back(render_step(step));

  const std::string history_header = "History:\n";
  const std::size_t fixed = head.size() + tail.size();
  if (entries.empty()) {
    if (fixed > budget) {
      throw Error(ErrorKind::kBudgetExceeded, "goal and reflections need " + std::to_string(fixed) +
                                                  " characters, budget is " + std::to_string(budget));
    }
    prompt.rendered = head + tail;
    return prompt;
  }

  // Keep the longest suffix of the history that fits.
  std::size_t keep = 0;
  std::vector<std::size_t> suffix_sizes(entries.size() + 1, 0);
  for (std::size_t k = 1; k <= entries.size(); ++k) {
    suffix_sizes[k] = suffix_sizes[k - 1] + entries[entries.size() - k].size();
  }
  bool any_fit = false;
  for (std::size_t k = entries.size() + 1; k-- > 0;) {
    const std::size_t elided = entries.size() - k;
    const std::size_t size = fixed + history_header.size() +
                             (elided > 0 ? elision_marker(elided).size() : 0) + suffix_sizes[k];
    if (size <= budget) {
      keep = k;
      any_fit = true;
      break;
    }
  }
  if (!any_fit) {
    throw Error(ErrorKind::kBudgetExceeded, "goal and reflections do not fit in " +
                                                std::to_string(budget) + " characters");
  }

  prompt.elided_steps = entries.size() - keep;
  std::string body = history_header;
  if (prompt.elided_steps > 0) body += elision_marker(prompt.elided_steps);
  for (std::size_t i = prompt.elided_steps; i < entries.size(); ++i) {
    body += entries[i];
    prompt.short_term.push_back(entries[i]);
  }
  prompt.rendered = head + body + tail;
  return prompt;
}

ScriptedActor::ScriptedActor(TemplateLibrary library) : library_(std::move(library)) {}

bool ScriptedActor::corrected(FailureMode mode, std::span<const std::string> long_term) const {
  const auto id = library_.corrective_for(mode);
  if (!id) return false;
  return std::any_of(long_term.begin(), long_term.end(),
                     [&](const std::string& r) { return library_.matches(r, *id); });
}

FailureMode ScriptedActor::effective_mode(const TaskSpec& task,
                                          std::span<const std::string> long_term) const {
  for (const auto& t : library_.templates()) {
    if (!t.harmful) continue;
    const bool present = std::any_of(long_term.begin(), long_term.end(),
                                     [&](const std::string& r) { return library_.matches(r, t.id); });
    if (present && !corrected(FailureMode::kLoopRepeat, long_term)) return FailureMode::kLoopRepeat;
  }
  if (task.failure_mode != FailureMode::kNone && !corrected(task.failure_mode, long_term)) {
    return task.failure_mode;
  }
  return FailureMode::kNone;
}

std::string ScriptedActor::act(const ActorPrompt& prompt, const TaskSpec& task) const {
  const FailureMode mode = effective_mode(task, prompt.long_term);
  const std::vector<std::string>* script = &task.gold_actions;
  if (mode != FailureMode::kNone) {
    auto it = task.failure_actions.find(mode);
    if (it != task.failure_actions.end()) script = &it->second;
  }
  if (script->empty()) {
    throw Error(ErrorKind::kEmptyAction, "task " + task.task_id + " has no scripted actions");
  }
  // Past the end of a script the actor keeps issuing its last action.
  const std::size_t index = std::min(prompt.step_count, script->size() - 1);
  return (*script)[index];
}

std::string scripted_act(const ScriptedActor& actor, const ActorPrompt& prompt, const TaskSpec& task) {
  return actor.act(prompt, task);
}

}  // namespace retrospect
