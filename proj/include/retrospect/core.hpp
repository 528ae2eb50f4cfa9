#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retrospect/error.hpp"

namespace retrospect {

// Error patterns the scripted actor can be configured with. Each one leaves a
// distinct trace in the trajectory text and has exactly one corrective
// reflection template.
enum class FailureMode {
  kNone,
  kPrematureFinish,
  kWrongEntity,
  kLoopRepeat,
  kMissedLookup,
  kWrongOption,
};

inline constexpr FailureMode kAllFailureModes[] = {
    FailureMode::kNone,        FailureMode::kPrematureFinish, FailureMode::kWrongEntity,
    FailureMode::kLoopRepeat,  FailureMode::kMissedLookup,    FailureMode::kWrongOption,
};

std::string_view to_string(FailureMode mode);
std::optional<FailureMode> parse_failure_mode(std::string_view name);

struct Step {
  int timestep = 0;          // 1-based
  std::string state_text;    // observation the action was taken in
  std::string action_text;
  double reward = 0.0;
};

// One trial of one task. The episode return is the environment's terminal
// reward on the final state, normalized to [0, 1].
struct Trajectory {
  std::string env_id;
  std::string task_id;
  std::string goal_text;
  int trial_index = 1;
  std::vector<Step> steps;
  std::string final_observation;
  bool terminated = false;  // false when the step budget ran out
  double episode_return = 0.0;
  bool success = false;
};

// Replay-buffer entry: reflection instruction x, response y and the returns
// of the trial before and after the reflection was applied.
struct ReflectionRecord {
  std::string env_id;
  std::string task_id;
  int trial_index = 1;
  std::string instruction;
  int response_id = 0;
  std::string response_text;
  double return_before = 0.0;
  double return_after = 0.0;
  double rating = 0.0;
  // log pi(y|x) at temperature 1 under the policy that produced y.
  double behavior_logprob = 0.0;
};

struct PreferencePair {
  std::string instruction;
  int accepted_id = 0;
  int rejected_id = 0;
  double accepted_rating = 0.0;
  double rejected_rating = 0.0;
};

// Trajectory invariants: timesteps 1..n without gaps, non-empty actions,
// return in [0, 1], success only at the success threshold.
void validate(const Trajectory& trajectory, double success_threshold = 1.0);

// Rating law plus the [0, 1] return range; throws kValidation.
void validate(const ReflectionRecord& record);

// G_{i+1} - G_i for consecutive trials of the same task.
double compute_rating(const Trajectory& before, const Trajectory& after);

ReflectionRecord make_record(const Trajectory& before, const Trajectory& after,
                             std::string instruction, int response_id,
                             std::string response_text, double behavior_logprob);

// Shortest round-trip decimal rendering, used wherever numbers appear in text.
std::string format_number(double value);

// Fixed 17-significant-digit rendering; parses back to the identical double.
std::string format_exact(double value);

}  // namespace retrospect
