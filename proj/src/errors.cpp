#include "uqpe/errors.hpp"

namespace uqpe {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::RowWithMissingValue: return "RowWithMissingValue";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::OutOfGridRange: return "OutOfGridRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::ScaleNonPositive: return "ScaleNonPositive";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::ZeroWeightMass: return "ZeroWeightMass";
    case ErrorCode::SingularLocalDesign: return "SingularLocalDesign";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::DegenerateIndicator: return "DegenerateIndicator";
    case ErrorCode::ReplicateFailure: return "ReplicateFailure";
    case ErrorCode::OracleNotConverged: return "OracleNotConverged";
    case ErrorCode::CellFailureRateExceeded: return "CellFailureRateExceeded";
  }
  return "UnknownError";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn:
    case ErrorCode::NonNumericCell:
    case ErrorCode::EmptyFile:
    case ErrorCode::RowWithMissingValue:
    case ErrorCode::EmptyInput:
    case ErrorCode::GridTooSmall:
    case ErrorCode::GridMismatch:
    case ErrorCode::OutOfGridRange:
    case ErrorCode::InvalidArgument:
      return true;
    default:
      return false;
  }
}

} // namespace uqpe
