#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace screencorr {

enum class ErrorCode {
  kMalformedDocument,
  kMalformedBounds,
  kDuplicateElementId,
  kUnknownCategoryName,
  kDimensionMismatch,
  kEmptyScreen,
  kInvalidConfig,
  kEmptyCorpus,
  kNonFiniteGradient,
  kUnknownCategory,
  kModelVersionMismatch,
  kEmptyIndex,
  kEmptyAnnotationStore,
  kNoMatch,
  kNotFound,
  kIo,
  kCheckpointMismatch,
};

std::string_view error_code_name(ErrorCode code);

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace screencorr
