#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "retrospect/core.hpp"
#include "retrospect/rewards.hpp"

namespace retrospect {

// Two-hop question: answer = relations[1] of (relations[0] of start_entity).
struct QaAnswer {
  std::string answer;
  std::string start_entity;
  std::string bridge_entity;
  std::vector<std::string> relations;
};

// Put an object of `object_type`, processed into `required_state`
// ("clean", "hot" or "cool"), into receptacle `target`.
struct HouseGoal {
  std::string object_type;
  std::string required_state;
  std::string target;
};

struct ShopGoal {
  rewards::ShopTarget target;
  std::string product_title;
};

using HiddenAnswer = std::variant<QaAnswer, HouseGoal, ShopGoal>;

// A task instance. Everything past goal_text is ground truth that must never
// reach an observation: the hidden answer and the scripted actor's plans.
struct TaskSpec {
  std::string env_id;
  std::string task_id;
  std::string split;  // "train" or "validation"
  std::string goal_text;
  HiddenAnswer hidden_answer;
  FailureMode failure_mode = FailureMode::kNone;
  std::vector<std::string> gold_actions;
  std::map<FailureMode, std::vector<std::string>> failure_actions;
};

}  // namespace retrospect
