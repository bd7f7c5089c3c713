#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sleid {

enum class ErrorCode {
  kParseError,
  kConflictingRecord,
  kOrderingViolation,
  kNotFound,
  kBadConfig,
  kTooFewSamples,
  kSchemaError,
  kEmptyInput,
  kDegenerateLabels,
  kTooFewPerClass,
  kUndefined,
  kInvalidTransition,
  kFormatError,
  kIoError,
};

// Coarse grouping used by the command line for exit codes.
enum class ErrorCategory { kConfig, kData, kStage };

std::string_view error_code_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace sleid
