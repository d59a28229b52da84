#pragma once

#include <stdexcept>
#include <string>

namespace irf {

enum class ErrorCode {
  MissingColumn,
  NonNumericCell,
  InvalidLabel,
  EmptyFile,
  EmptyFeatureSet,
  InvalidDataset,
  InvalidConfig,
  EmptySet,
  DegenerateSplit,
  UndefinedRate,
  EmptyLeft,
  DimensionMismatch,
  LengthMismatch,
  EmptyValidation,
  IoError,
  MalformedModel,
  VersionMismatch,
};

const char* to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library surfaces as an irf::Error
/// carrying a machine-checkable code plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace irf
