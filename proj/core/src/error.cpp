#include "logitunc/error.hpp"

namespace logitunc {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::PredictionMismatch: return "PredictionMismatch";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::CorruptModelFile: return "CorruptModelFile";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateScores: return "DegenerateScores";
    case ErrorCode::DegenerateHyperparams: return "DegenerateHyperparams";
    case ErrorCode::NoFittableClass: return "NoFittableClass";
    case ErrorCode::ClassNotFitted: return "ClassNotFitted";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace logitunc
