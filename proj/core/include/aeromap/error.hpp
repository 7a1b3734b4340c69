#pragma once

#include <stdexcept>
#include <string>

namespace aeromap {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptImage,
  InvalidDimensions,
  ImageTooSmall,
  PatchOutOfBounds,
  EmptyTrainSet,
  PointAtInfinity,
  DegenerateSet,
  DegenerateConfiguration,
  NotEnoughPairs,
  NoConsensus,
  NonInvertibleResult,
  CapacityExceeded,
  SourceTooSmall,
  EmptyOverlap,
  InvalidConfig,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception type thrown by every aeromap module. The code identifies the
/// failure class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aeromap
