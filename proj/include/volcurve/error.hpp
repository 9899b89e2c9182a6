#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace volcurve {

// Stable error codes. The CLI reports these verbatim in its error JSON, so
// existing names must not change.
enum class ErrorCode {
  invalid_argument,
  no_spread,
  outside_support,
  not_identifiable,
  not_converged,
  missing_covariate,
  unknown_provider,
  no_volume_history,
  parse_error,
  duplicate_key,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::no_spread: return "no_spread";
    case ErrorCode::outside_support: return "outside_support";
    case ErrorCode::not_identifiable: return "not_identifiable";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::missing_covariate: return "missing_covariate";
    case ErrorCode::unknown_provider: return "unknown_provider";
    case ErrorCode::no_volume_history: return "no_volume_history";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::duplicate_key: return "duplicate_key";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace volcurve
