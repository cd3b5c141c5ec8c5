#pragma once

#include <stdexcept>
#include <string>

namespace maleval {

enum class ErrorKind {
  // bundle / catalog loading
  MissingFile,
  SchemaViolation,
  DanglingReference,
  DuplicateSignature,
  CyclicReplacement,
  // reduction
  EmptyReachableSet,
  EmptyEntrypointSet,
  // gateway
  GatewayError,
  AuthError,
  RateLimited,
  ProviderError,
  UnparseableReply,
  BudgetTooSmall,
  // representation / ground truth
  MixedMode,
  TaxonomyViolation,
  // evaluation
  DegenerateSplit,
  ClassifierNotConverged,
  EmptyGroundTruth,
  EmptySelection,
  NoBehaviors,
  MissingReport,
  ScaleMismatch,
  // analytics
  DegenerateGroups,
  // configuration
  ConfigError,
};

const char* error_kind_name(ErrorKind kind);

/// Single exception type for all pipeline failures; `kind()` identifies the
/// contract that was violated, the message carries the field-level detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace maleval
