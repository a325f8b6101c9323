#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace unipo {

enum class ErrorCode {
  InvalidArgument,
  Syntax,
  Schema,
  Validation,
  NotFound,
  NonFiniteInput,
  EmptyGroup,
  EmptyResponse,
  MissingReferenceLogprob,
  MissingPrecomputedAdvantage,
  UnknownComponentKind,
  LengthExceedsLmax,
  ThresholdTooSmall,
  UnknownMetric,
  UnknownBinding,
  DuplicateAlgorithm,
  InvalidConfig,
  Io,
};

/// Stable kebab-case name, used in HTTP error bodies and CLI diagnostics.
const char* error_code_name(ErrorCode code) noexcept;

/// Every failure in the core surfaces as this exception. `path()` is a
/// document path such as `steps[3].groups[0].responses[1].tokens[7].logprob_policy`
/// when the error concerns a specific value; `offset()` is the byte offset
/// for syntax errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string path = {},
        std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(message), code_(code), path_(std::move(path)), offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::string path_;
  std::optional<std::size_t> offset_;
};

}  // namespace unipo
