#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kimura {

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kSingularEvaluation,
  kInvalidWeight,
  kInvalidHarnackParameters,
  kBoundaryEvaluation,
  kNonDerivable,
  kValidationFailure,
  kEllipticityViolation,
  kInvalidMatrix,
  kMissingPartner,
  kNumericFailure,
  kInvalidStart,
  kBoundaryDataGap,
  kWeightBlowup,
  kInvalidTestFunction,
  kUnstableConfiguration,
  kInvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so that
/// callers (and the CLI exit-code mapping) can branch on it.
class KimuraError : public std::runtime_error {
 public:
  KimuraError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw KimuraError(kind, what); }

}  // namespace kimura
