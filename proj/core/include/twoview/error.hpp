#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twoview {

enum class ErrorCode {
  kInvalidInput,
  kDegenerateGeometry,
  kDegenerateSample,
  kInsufficientPoints,
  kInsufficientSupport,
  kInvalidPrior,
  kEstimationFailed,
  kUndefinedMetric,
  kDataError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable category. All library failures
/// are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kDegenerateSample: return "DegenerateSample";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kInsufficientSupport: return "InsufficientSupport";
    case ErrorCode::kInvalidPrior: return "InvalidPrior";
    case ErrorCode::kEstimationFailed: return "EstimationFailed";
    case ErrorCode::kUndefinedMetric: return "UndefinedMetric";
    case ErrorCode::kDataError: return "DataError";
  }
  return "Unknown";
}

}  // namespace twoview
