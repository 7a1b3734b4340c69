#include "aeromap/error.hpp"

namespace aeromap {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::PatchOutOfBounds: return "PatchOutOfBounds";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::DegenerateSet: return "DegenerateSet";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NotEnoughPairs: return "NotEnoughPairs";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::NonInvertibleResult: return "NonInvertibleResult";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::SourceTooSmall: return "SourceTooSmall";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace aeromap
