#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace escgnn {

enum class ErrorCode {
  InvalidArgument,
  DisconnectedGraph,
  DegeneratePoints,
  NonpositiveEpsilon,
  UnsupportedDimension,
  ZeroDegree,
  RankDeficientFrame,
  DimensionMismatch,
  TooLargeToMaterialize,
  AllSignalsFlat,
  EigensolverNoConvergence,
  NonpositiveQ,
  ShapeMismatch,
  ConfigMismatch,
  NonFiniteLoss,
  IoError,
  FormatError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. The CLI prints
/// `error: <CodeName>: <message>` for these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace escgnn
