#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psg4d {

enum class ErrorCode {
  DimensionMismatch,
  InvalidThreshold,
  InvalidVoxelSize,
  InvalidArgument,
  MalformedRle,
  ShapeMismatch,
  KindMismatch,
  EmptyMatrix,
  MissingTrajectory,
  VocabularyMismatch,
  NoGroundTruth,
  DuplicateVideoId,
  FrustumViolation,
  MissingFile,
  SchemaViolation,
  ChecksumMismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the Python layer) can branch on it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace psg4d
