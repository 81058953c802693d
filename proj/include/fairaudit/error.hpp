#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairaudit {

// Every failure the core can report. The C API maps these one-to-one onto
// fa_status values, so the order here is part of the ABI.
enum class ErrorCode {
  invalid_argument = 1,
  io,
  parse,
  missing_column,
  duplicate_key,
  empty_join,
  zero_variance,
  empty_side,
  degenerate_range,
  too_few_samples,
  non_finite_feature,
  dimension_mismatch,
  length_mismatch,
  empty_input,
  constant_target,
  degenerate_feature,
  empty_group,
  singleton_group,
  mismatched_provenance,
  invalid_request,
  zero_baseline,
  empty_cell,
  invalid_config,
  internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fairaudit
