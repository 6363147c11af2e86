#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diccae {

enum class ErrorCode {
  kInsufficientData,
  kDimension,
  kEmptyInput,
  kEmptyClass,
  kInsufficientClasses,
  kIndex,
  kInsufficientBatch,
  kLabelRange,
  kInsufficientPoints,
  kConfig,
  kCache,
  kShape,
  kStratification,
  kSampling,
  kBadMagic,
  kTruncated,
  kVersion,
  kIo,
  kUnlabeled,
  kFormat,
};

// Stable machine-readable name, used in the CLI's `error:<code>:` prefix.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace diccae
