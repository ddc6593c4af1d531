#pragma once

#include <stdexcept>
#include <string>

namespace mm {

enum class ErrorCode {
  parse_error,
  duplicate_metric,
  missing_attempts,
  unknown_stat,
  empty_input,
  insufficient_data,
  degenerate_season,
  degenerate_metric,
  noise_dominates,
  singular_matrix,
  not_positive_definite,
  invalid_argument,
  io_error,
};

// Stable machine-readable name, e.g. "ParseError".
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace mm
