#pragma once

#include <stdexcept>
#include <string>

namespace retrospect {

enum class ErrorKind {
  kIdentityMismatch,
  kTrialOrder,
  kTaskNotFound,
  kEpisodeOver,
  kRolloutAborted,
  kBudgetExceeded,
  kRemoteUnavailable,
  kEmptyAction,
  kNotAFailure,
  kNumericalError,
  kInvalidTemperature,
  kPersistFailed,
  kValidation,
  kMalformedGroup,
  kEmptyBuffer,
  kContaminatedSftSet,
  kCheckpointMissing,
  kInvalidArgument,
  kParse,
};

const char* to_string(ErrorKind kind);

// Every failure the library reports is an Error carrying its kind. The
// optional stage tag is filled in by the training pipeline so callers can
// tell which step of the run failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message),
        stage_(std::move(stage)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& message() const { return message_; }
  const std::string& stage() const { return stage_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::string stage_;
};

}  // namespace retrospect
