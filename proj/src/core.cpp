#include "retrospect/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace retrospect {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIdentityMismatch: return "IdentityMismatch";
    case ErrorKind::kTrialOrder: return "TrialOrder";
    case ErrorKind::kTaskNotFound: return "TaskNotFound";
    case ErrorKind::kEpisodeOver: return "EpisodeOver";
    case ErrorKind::kRolloutAborted: return "RolloutAborted";
    case ErrorKind::kBudgetExceeded: return "BudgetExceeded";
    case ErrorKind::kRemoteUnavailable: return "RemoteUnavailable";
    case ErrorKind::kEmptyAction: return "EmptyAction";
    case ErrorKind::kNotAFailure: return "NotAFailure";
    case ErrorKind::kNumericalError: return "NumericalError";
    case ErrorKind::kInvalidTemperature: return "InvalidTemperature";
    case ErrorKind::kPersistFailed: return "PersistFailed";
    case ErrorKind::kValidation: return "Validation";
    case ErrorKind::kMalformedGroup: return "MalformedGroup";
    case ErrorKind::kEmptyBuffer: return "EmptyBuffer";
    case ErrorKind::kContaminatedSftSet: return "ContaminatedSFTSet";
    case ErrorKind::kCheckpointMissing: return "CheckpointMissing";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kParse: return "Parse";
  }
  return "Unknown";
}

std::string_view to_string(FailureMode mode) {
  switch (mode) {
    case FailureMode::kNone: return "none";
    case FailureMode::kPrematureFinish: return "premature_finish";
    case FailureMode::kWrongEntity: return "wrong_entity";
    case FailureMode::kLoopRepeat: return "loop_repeat";
    case FailureMode::kMissedLookup: return "missed_lookup";
    case FailureMode::kWrongOption: return "wrong_option";
  }
  return "none";
}

std::optional<FailureMode> parse_failure_mode(std::string_view name) {
  for (FailureMode mode : kAllFailureModes) {
    if (to_string(mode) == name) return mode;
  }
  return std::nullopt;
}

void validate(const Trajectory& trajectory, double success_threshold) {
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    const Step& step = trajectory.steps[i];
    if (step.timestep != static_cast<int>(i) + 1) {
      throw Error(ErrorKind::kValidation, "timesteps must run 1..n without gaps");
    }
    if (step.action_text.empty()) {
      throw Error(ErrorKind::kValidation, "empty action at step " + std::to_string(i + 1));
    }
  }
  if (!(trajectory.episode_return >= 0.0 && trajectory.episode_return <= 1.0)) {
    throw Error(ErrorKind::kValidation, "episode return outside [0, 1]");
  }
  if (trajectory.success && trajectory.episode_return < success_threshold) {
    throw Error(ErrorKind::kValidation, "success flagged below the success threshold");
  }
  if (trajectory.trial_index < 1) {
    throw Error(ErrorKind::kValidation, "trial index must be >= 1");
  }
}

void validate(const ReflectionRecord& record) {
  auto in_unit = [](double g) { return g >= 0.0 && g <= 1.0; };
  if (!in_unit(record.return_before) || !in_unit(record.return_after)) {
    throw Error(ErrorKind::kValidation, "returns must lie in [0, 1]");
  }
  if (record.rating != record.return_after - record.return_before) {
    throw Error(ErrorKind::kValidation, "rating must equal return_after - return_before");
  }
  if (record.rating < -1.0 || record.rating > 1.0) {
    throw Error(ErrorKind::kValidation, "rating outside [-1, 1]");
  }
  if (!std::isfinite(record.behavior_logprob) || record.behavior_logprob > 0.0) {
    throw Error(ErrorKind::kValidation, "behavior log-probability must be finite and <= 0");
  }
}

double compute_rating(const Trajectory& before, const Trajectory& after) {
  if (before.env_id != after.env_id || before.task_id != after.task_id) {
    throw Error(ErrorKind::kIdentityMismatch,
                before.env_id + "/" + before.task_id + " vs " + after.env_id + "/" + after.task_id);
  }
  if (after.trial_index != before.trial_index + 1) {
    throw Error(ErrorKind::kTrialOrder, "trial " + std::to_string(after.trial_index) +
                                            " does not follow trial " +
                                            std::to_string(before.trial_index));
  }
  return after.episode_return - before.episode_return;
}

ReflectionRecord make_record(const Trajectory& before, const Trajectory& after,
                             std::string instruction, int response_id,
                             std::string response_text, double behavior_logprob) {
  ReflectionRecord record;
  record.rating = compute_rating(before, after);
  record.env_id = before.env_id;
  record.task_id = before.task_id;
  record.trial_index = before.trial_index;
  record.instruction = std::move(instruction);
  record.response_id = response_id;
  record.response_text = std::move(response_text);
  record.return_before = before.episode_return;
  record.return_after = after.episode_return;
  record.behavior_logprob = behavior_logprob;
  return record;
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

std::string format_exact(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace retrospect
