#ifndef SEMIMARKOV_ERRORS_HPP
#define SEMIMARKOV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace smp {

enum class ErrorCode {
  MalformedDocument,
  RowSumViolation,
  OrderZeroMismatch,
  NegativeMoment,
  EmptyTarget,
  OrderOutOfRange,
  AbsorbingState,
  TargetExclusion,
  InactiveState,
  DuplicateState,
  UnreachableTarget,
  UnreachableTargetSet,
  SingularSystem,
  MissingLowerMoments,
  WeightOutOfRange,
  SingularMixSystem,
  UnhittableDomain,
  HorizonMismatch,
  MissingFinalTarget,
  TruncationExceeded,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::OrderZeroMismatch: return "OrderZeroMismatch";
    case ErrorCode::NegativeMoment: return "NegativeMoment";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::AbsorbingState: return "AbsorbingState";
    case ErrorCode::TargetExclusion: return "TargetExclusion";
    case ErrorCode::InactiveState: return "InactiveState";
    case ErrorCode::DuplicateState: return "DuplicateState";
    case ErrorCode::UnreachableTarget: return "UnreachableTarget";
    case ErrorCode::UnreachableTargetSet: return "UnreachableTargetSet";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MissingLowerMoments: return "MissingLowerMoments";
    case ErrorCode::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::SingularMixSystem: return "SingularMixSystem";
    case ErrorCode::UnhittableDomain: return "UnhittableDomain";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::MissingFinalTarget: return "MissingFinalTarget";
    case ErrorCode::TruncationExceeded: return "TruncationExceeded";
  }
  return "UnknownError";
}

/// Library-wide exception. `code()` identifies the failure class so callers
/// (and the CLI exit-code mapping) can dispatch without parsing messages.
class SmpError : public std::runtime_error {
 public:
  SmpError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw SmpError(code, what);
}

}  // namespace smp

#endif  // SEMIMARKOV_ERRORS_HPP
