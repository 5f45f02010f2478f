#pragma once

#include <stdexcept>
#include <string>

namespace uqpe {

enum class ErrorCode {
  // input / configuration problems
  MissingColumn,
  NonNumericCell,
  EmptyFile,
  RowWithMissingValue,
  EmptyInput,
  GridTooSmall,
  GridMismatch,
  OutOfGridRange,
  InvalidArgument,
  // numeric failures
  RankDeficientDesign,
  SolverDivergence,
  ScaleNonPositive,
  DegenerateSample,
  ZeroWeightMass,
  SingularLocalDesign,
  ZeroDensity,
  SeparationDetected,
  DegenerateIndicator,
  ReplicateFailure,
  OracleNotConverged,
  CellFailureRateExceeded,
};

const char* error_code_name(ErrorCode code);

// Validation errors are caused by bad inputs or configuration; everything
// else is a numeric failure discovered during estimation. The CLI maps the
// former to exit code 2 and the latter to exit code 3.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

} // namespace uqpe
