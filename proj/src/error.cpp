#include "kimura/error.hpp"

namespace kimura {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kSingularEvaluation: return "singular-evaluation";
    case ErrorKind::kInvalidWeight: return "invalid-weight";
    case ErrorKind::kInvalidHarnackParameters: return "invalid-harnack-parameters";
    case ErrorKind::kBoundaryEvaluation: return "boundary-evaluation";
    case ErrorKind::kNonDerivable: return "non-derivable";
    case ErrorKind::kValidationFailure: return "validation-failure";
    case ErrorKind::kEllipticityViolation: return "ellipticity-violation";
    case ErrorKind::kInvalidMatrix: return "invalid-matrix";
    case ErrorKind::kMissingPartner: return "missing-partner";
    case ErrorKind::kNumericFailure: return "numeric-failure";
    case ErrorKind::kInvalidStart: return "invalid-start";
    case ErrorKind::kBoundaryDataGap: return "boundary-data-gap";
    case ErrorKind::kWeightBlowup: return "weight-blowup";
    case ErrorKind::kInvalidTestFunction: return "invalid-test-function";
    case ErrorKind::kUnstableConfiguration: return "unstable-configuration";
    case ErrorKind::kInvalidConfig: return "invalid-config";
  }
  return "unknown";
}

}  // namespace kimura
