#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmap {

enum class ErrorCode {
  InvalidArgument,
  DegenerateSample,
  ManifestParse,
  TensorParse,
  ShapeMismatch,
  DuplicateId,
  IndexOutOfRange,
  DimensionTooLarge,
  DimensionMismatch,
  NumericalUnderflow,
  Configuration,
  DisconnectedGraph,
  SingleClass,
  LengthMismatch,
  TooFewSamples,
  IncompleteVotes,
  SubjectSetMismatch,
  VersionMismatch,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::ManifestParse: return "ManifestParse";
    case ErrorCode::TensorParse: return "TensorParse";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::Configuration: return "Configuration";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::IncompleteVotes: return "IncompleteVotes";
    case ErrorCode::SubjectSetMismatch: return "SubjectSetMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. The message is prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

  /// Same error with `context` prepended to the message.
  Error within(const std::string& context) const { return Error(code_, context + ": " + detail_); }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace dmap
