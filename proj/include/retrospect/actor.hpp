#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "retrospect/core.hpp"
#include "retrospect/task.hpp"
#include "retrospect/templates.hpp"

namespace retrospect {

inline constexpr std::size_t kDefaultPromptBudget = 4096;

// Actor input: goal, short-term memory (the trial so far) and long-term
// memory (reflections from earlier trials, oldest first).
struct ActorPrompt {
  std::string goal_text;
  std::vector<std::string> short_term;  // one rendered entry per kept step
  std::vector<std::string> long_term;
  std::string current_observation;
  std::size_t step_count = 0;    // steps taken so far, including elided ones
  std::size_t elided_steps = 0;
  std::string rendered;
};

std::string render_step(const Step& step);

// Renders the prompt within `budget` characters. Oldest history steps are
// dropped first; goal and reflections are never dropped, and kBudgetExceeded
// is thrown when they alone do not fit.
ActorPrompt assemble_prompt(const std::string& goal, std::span<const Step> history,
                            std::span<const std::string> reflections,
                            std::size_t budget = kDefaultPromptBudget,
                            const std::string& current_observation = {});

class ActorPolicy {
 public:
  virtual ~ActorPolicy() = default;
  virtual std::string act(const ActorPrompt& prompt, const TaskSpec& task) const = 0;
};

// Temperature-zero stand-in for a frozen LLM. It plays the task's scripted
// plan and shows the task's failure mode unless a reflection in long-term
// memory renders the template that corrects it. A harmful template in
// memory makes the actor loop unless the loop correction is also present.
class ScriptedActor : public ActorPolicy {
 public:
  explicit ScriptedActor(TemplateLibrary library = TemplateLibrary::standard());

  std::string act(const ActorPrompt& prompt, const TaskSpec& task) const override;

  // The failure mode the actor exhibits for this task given its memory.
  FailureMode effective_mode(const TaskSpec& task, std::span<const std::string> long_term) const;

  const TemplateLibrary& library() const { return library_; }

 private:
  bool corrected(FailureMode mode, std::span<const std::string> long_term) const;

  TemplateLibrary library_;
};

std::string scripted_act(const ScriptedActor& actor, const ActorPrompt& prompt, const TaskSpec& task);

}  // namespace retrospect
