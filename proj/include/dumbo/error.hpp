#pragma once

#include <stdexcept>
#include <string>

namespace dumbo {

enum class ErrorCode {
  UncoveredDimension,
  EmptyFactor,
  IndexOutOfRange,
  DuplicateFactor,
  ArityMismatch,
  UnsupportedFamily,
  InvalidArgument,
  SingularGram,
  ShapeMismatch,
  MissingFactorOutputs,
  RowSumViolation,
  AllZero,
  InvalidDelta,
  NonFiniteGradient,
  NegativeLipschitz,
  OutOfDomain,
  ParseError,
  UnknownKey,
  IncompatibleVariant,
  ObjectiveFailure,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (and tests) can dispatch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dumbo
