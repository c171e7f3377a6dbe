#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clex {

enum class ErrorCode {
  InvalidArgument,
  ConstantFeature,
  ConstantComponent,
  DimensionMismatch,
  InsufficientClusters,
  DegenerateCluster,
  AllNoiseModel,
  MTooLarge,
  ZeroBaselinePerformance,
  DegenerateFold,
  ConfigInvalid,
  UnreadableFile,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code; the CLI maps codes onto its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace clex
