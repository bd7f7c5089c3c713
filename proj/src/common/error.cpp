#include "sleid/common/error.hpp"

namespace sleid {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConflictingRecord: return "ConflictingRecord";
    case ErrorCode::kOrderingViolation: return "OrderingViolation";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kTooFewPerClass: return "TooFewPerClass";
    case ErrorCode::kUndefined: return "Undefined";
    case ErrorCode::kInvalidTransition: return "InvalidTransition";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadConfig:
      return ErrorCategory::kConfig;
    case ErrorCode::kParseError:
    case ErrorCode::kConflictingRecord:
    case ErrorCode::kOrderingViolation:
    case ErrorCode::kNotFound:
    case ErrorCode::kSchemaError:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kFormatError:
    case ErrorCode::kIoError:
      return ErrorCategory::kData;
    default:
      return ErrorCategory::kStage;
  }
}

}  // namespace sleid
