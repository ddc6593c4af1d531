#include "metametrics/error.hpp"

namespace mm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::duplicate_metric: return "DuplicateMetric";
    case ErrorCode::missing_attempts: return "MissingAttempts";
    case ErrorCode::unknown_stat: return "UnknownStat";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::degenerate_season: return "DegenerateSeason";
    case ErrorCode::degenerate_metric: return "DegenerateMetric";
    case ErrorCode::noise_dominates: return "NoiseDominates";
    case ErrorCode::singular_matrix: return "SingularMatrix";
    case ErrorCode::not_positive_definite: return "NotPositiveDefinite";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mm
