#include "escgnn/error.hpp"

namespace escgnn {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DegeneratePoints: return "DegeneratePoints";
    case ErrorCode::NonpositiveEpsilon: return "NonpositiveEpsilon";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::ZeroDegree: return "ZeroDegree";
    case ErrorCode::RankDeficientFrame: return "RankDeficientFrame";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooLargeToMaterialize: return "TooLargeToMaterialize";
    case ErrorCode::AllSignalsFlat: return "AllSignalsFlat";
    case ErrorCode::EigensolverNoConvergence: return "EigensolverNoConvergence";
    case ErrorCode::NonpositiveQ: return "NonpositiveQ";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace escgnn
