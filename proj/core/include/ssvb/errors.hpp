#pragma once

#include <stdexcept>
#include <string>

namespace ssvb {

enum class ErrorCode {
  InvalidArgument,
  ConstantColumn,
  NonFinite,
  DimensionMismatch,
  DegeneratePrior,
  SingularSystem,
  AllZeroSpectrum,
  TooFewSamples,
  ZeroOlsError,
  MismatchBeyondTolerance,
  Parse,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegeneratePrior: return "DegeneratePrior";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::AllZeroSpectrum: return "AllZeroSpectrum";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ZeroOlsError: return "ZeroOlsError";
    case ErrorCode::MismatchBeyondTolerance: return "MismatchBeyondTolerance";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace ssvb
