#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slam {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidSpec,
  kInvalidConfig,
  kDuplicateModel,
  kUnknownModel,
  kUnknownLocalModel,
  kUnknownProvider,
  kRunnerUnreachable,
  kPullFailed,
  kRateLimitExhausted,
  kProviderError,
  kTimeout,
  kDimensionMismatch,
  kMissingPlaceholder,
  kAllModelsFailed,
  kNoRecords,
  kUnknownAssignment,
  kUnknownItem,
  kScoreOutOfRange,
  kParseFailure,
  kTooFewResponses,
  kEmptyText,
  kZeroVector,
  kKTooLarge,
  kDuplicateEntries,
  kNoSuccessfulRecords,
  kInvalidUtilization,
  kDivisionByZero,
  kValidationFailed,
  kStorageFailure,
  kNotFound,
  kConflict,
};

std::string_view error_code_name(ErrorCode code);

// Every recoverable failure in the library is reported as an Error carrying
// a machine-readable code. Callers at process or HTTP boundaries map codes
// to exit statuses and response codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace slam
