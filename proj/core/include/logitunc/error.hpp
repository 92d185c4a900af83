#pragma once

#include <stdexcept>
#include <string>

namespace logitunc {

enum class ErrorCode {
  InvalidArgument,   // caller-side precondition or configuration violation
  IoFailure,
  EmptyFile,
  MalformedRow,
  LabelOutOfRange,
  PredictionMismatch,
  SchemaVersionMismatch,
  CorruptModelFile,
  InsufficientData,
  NumericalFailure,
  EmptyCandidateSet,
  EmptyInput,
  DegenerateScores,
  DegenerateHyperparams,
  NoFittableClass,
  ClassNotFitted,
  LengthMismatch,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  /// The message without the leading error-code name.
  const std::string& detail() const noexcept { return detail_; }

  // Usage errors are the caller's fault (bad flags, bad hyperparameters,
  // mismatched argument lengths); everything else is a data or model problem.
  bool is_usage_error() const noexcept {
    return code_ == ErrorCode::InvalidArgument || code_ == ErrorCode::LengthMismatch;
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace logitunc
